#include "fusecond/fusion.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "fusecond/error.hpp"

namespace fusecond {

std::string SourceId::name() const {
    return is_global() ? std::string("global") : "local" + std::to_string(index);
}

SourceId SourceId::parse(const std::string& name) {
    if (name == "global") return global();
    constexpr std::string_view prefix = "local";
    if (name.size() > prefix.size() && name.compare(0, prefix.size(), prefix) == 0) {
        std::size_t k = 0;
        const char* first = name.data() + prefix.size();
        const char* last = name.data() + name.size();
        auto [ptr, ec] = std::from_chars(first, last, k);
        if (ec == std::errc() && ptr == last && k >= 1) return local(k);
    }
    fail(ErrorCategory::lookup, "unknown source name '" + name + "'");
}

const char* to_string(TokenKind kind) noexcept {
    switch (kind) {
        case TokenKind::cls: return "CLS";
        case TokenKind::reg: return "REG";
        case TokenKind::patch: return "PATCH";
    }
    return "?";
}

UnifiedConditionTokens fuse_conditions(const std::vector<ConditionSource>& sources) {
    require(!sources.empty(), ErrorCategory::fusion, "fusion: no condition sources");
    const std::size_t dim = sources.front().tokens.token_dim();
    const std::size_t regs = sources.front().tokens.layout.register_count;

    std::vector<const ConditionSource*> ordered;
    std::set<SourceId> seen;
    std::size_t total = 0;
    for (const auto& s : sources) {
        require(s.tokens.token_dim() == dim, ErrorCategory::fusion, "fusion: token_dim differs across sources");
        require(s.tokens.layout.register_count == regs, ErrorCategory::fusion,
                "fusion: register count differs across sources");
        require(s.tokens.tokens.rows() == s.tokens.layout.total_count(), ErrorCategory::fusion,
                "fusion: token matrix does not match its layout");
        require(seen.insert(s.id).second, ErrorCategory::fusion, "fusion: duplicate source " + s.id.name());
        validate(s.selection, s.tokens.layout.patch_count);
        total += 1 + regs + s.selection.size();
        ordered.push_back(&s);
    }
    std::stable_partition(ordered.begin(), ordered.end(), [](const ConditionSource* s) { return !s->id.is_global(); });

    UnifiedConditionTokens out;
    out.matrix = Matrix(total, dim);
    out.provenance.reserve(total);
    std::size_t row = 0;
    auto copy_row = [&](const TokenSequence& seq, std::size_t position, TokenProvenance prov) {
        const auto src = seq.tokens.row(position);
        std::copy(src.begin(), src.end(), out.matrix.row(row++).begin());
        out.provenance.push_back(prov);
    };
    for (const ConditionSource* s : ordered) {
        const auto& layout = s->tokens.layout;
        copy_row(s->tokens, layout.cls_position(), {s->id, TokenKind::cls, std::nullopt});
        for (std::size_t r = 0; r < regs; ++r) {
            copy_row(s->tokens, layout.first_register() + r, {s->id, TokenKind::reg, std::nullopt});
        }
        for (auto i : s->selection.indices) {
            copy_row(s->tokens, layout.patch_position(i), {s->id, TokenKind::patch, i});
        }
    }
    return out;
}

std::vector<std::size_t> columns_of(const UnifiedConditionTokens& unified, SourceId source) {
    std::vector<std::size_t> out;
    bool present = false;
    for (std::size_t row = 0; row < unified.provenance.size(); ++row) {
        const auto& p = unified.provenance[row];
        if (p.source != source) continue;
        present = true;
        if (p.kind == TokenKind::patch) out.push_back(row);
    }
    require(present, ErrorCategory::lookup, "fusion: source " + source.name() + " not present");
    return out;
}

std::string format_provenance(const UnifiedConditionTokens& unified) {
    std::ostringstream out;
    out << "PROVENANCE " << unified.provenance.size() << "\n";
    for (std::size_t row = 0; row < unified.provenance.size(); ++row) {
        const auto& p = unified.provenance[row];
        out << row << ' ' << p.source.name() << ' ' << to_string(p.kind) << ' ';
        if (p.patch_index) {
            out << *p.patch_index;
        } else {
            out << '-';
        }
        out << '\n';
    }
    return out.str();
}

std::vector<TokenProvenance> parse_provenance(const std::string& text) {
    std::istringstream in(text);
    std::string tag;
    std::size_t count = 0;
    if (!(in >> tag >> count) || tag != "PROVENANCE") fail(ErrorCategory::format, "provenance: bad header");
    std::vector<TokenProvenance> out;
    out.reserve(count);
    for (std::size_t row = 0; row < count; ++row) {
        std::size_t index = 0;
        std::string source, kind, patch;
        if (!(in >> index >> source >> kind >> patch) || index != row) {
            fail(ErrorCategory::format, "provenance: malformed record " + std::to_string(row));
        }
        TokenProvenance p;
        p.source = SourceId::parse(source);
        if (kind == "CLS" || kind == "REG") {
            p.kind = kind == "CLS" ? TokenKind::cls : TokenKind::reg;
            if (patch != "-") fail(ErrorCategory::format, "provenance: CLS/REG rows carry no patch index");
        } else if (kind == "PATCH") {
            p.kind = TokenKind::patch;
            std::size_t value = 0;
            const auto [ptr, ec] = std::from_chars(patch.data(), patch.data() + patch.size(), value);
            if (ec != std::errc() || ptr != patch.data() + patch.size()) {
                fail(ErrorCategory::format, "provenance: bad patch index '" + patch + "'");
            }
            p.patch_index = value;
        } else {
            fail(ErrorCategory::format, "provenance: unknown token kind '" + kind + "'");
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace fusecond
