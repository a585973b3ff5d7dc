#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "fusecond/patch_grid.hpp"
#include "fusecond/toy_encoder.hpp"

namespace fusecond {

// Identifies a condition image: the global image or local image k (1-based).
struct SourceId {
    enum class Kind { global, local };

    Kind kind = Kind::global;
    std::size_t index = 0;

    static SourceId global() { return {Kind::global, 0}; }
    static SourceId local(std::size_t k) { return {Kind::local, k}; }

    bool is_global() const noexcept { return kind == Kind::global; }

    // "global" or "local<k>".
    std::string name() const;
    static SourceId parse(const std::string& name);

    friend auto operator<=>(const SourceId&, const SourceId&) = default;
};

enum class TokenKind { cls, reg, patch };

const char* to_string(TokenKind kind) noexcept;

struct TokenProvenance {
    SourceId source;
    TokenKind kind = TokenKind::patch;
    std::optional<std::size_t> patch_index;  // set for PATCH rows only

    friend bool operator==(const TokenProvenance&, const TokenProvenance&) = default;
};

struct ConditionSource {
    SourceId id;
    TokenSequence tokens;
    TokenIndexSet selection;
};

struct UnifiedConditionTokens {
    Matrix matrix;  // T x token_dim
    std::vector<TokenProvenance> provenance;

    std::size_t token_count() const noexcept { return matrix.rows(); }
};

// Concatenates CLS, REG and selected PATCH rows of every source. Local sources
// keep their relative order and the global source, when present, goes last.
UnifiedConditionTokens fuse_conditions(const std::vector<ConditionSource>& sources);

// Unified rows holding the PATCH tokens of one source (CLS/REG excluded).
std::vector<std::size_t> columns_of(const UnifiedConditionTokens& unified, SourceId source);

// One record per row: "<row> <source> <kind> <patch index or ->".
std::string format_provenance(const UnifiedConditionTokens& unified);
std::vector<TokenProvenance> parse_provenance(const std::string& text);

}  // namespace fusecond
