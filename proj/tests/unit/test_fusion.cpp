#include "doctest.h"

#include "fusecond/error.hpp"
#include "fusecond/fusion.hpp"
#include "fusecond_checks/oracles.hpp"

using namespace fusecond;

namespace {

TokenSequence random_sequence(SplitMix64& rng, std::size_t registers, std::size_t patches, std::size_t dim) {
    return TokenSequence{TokenLayout{registers, patches}, oracle::random_matrix(rng, 1 + registers + patches, dim)};
}

std::vector<std::size_t> scan_patch_rows(const UnifiedConditionTokens& u, SourceId id) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < u.provenance.size(); ++i) {
        if (u.provenance[i].source == id && u.provenance[i].kind == TokenKind::patch) rows.push_back(i);
    }
    return rows;
}

}  // namespace

TEST_CASE("source ids") {
    CHECK(SourceId::global().name() == "global");
    CHECK(SourceId::local(3).name() == "local3");
    CHECK(SourceId::parse("local12") == SourceId::local(12));
    CHECK(SourceId::parse("global") == SourceId::global());
    CHECK_THROWS_AS(SourceId::parse("local0"), Error);
    CHECK_THROWS_AS(SourceId::parse("locals"), Error);
    CHECK_THROWS_AS(SourceId::parse("Global"), Error);
}

TEST_CASE("full selection keeps every token") {
    SplitMix64 rng(31);
    const auto seq = random_sequence(rng, 3, 9, 8);
    TokenIndexSet all;
    for (std::size_t i = 0; i < 9; ++i) all.indices.push_back(i);
    const auto u = fuse_conditions({{SourceId::local(1), seq, all}});
    CHECK(u.token_count() == 13);
    CHECK(u.matrix == seq.tokens);
}

TEST_CASE("empty selection keeps CLS and registers") {
    SplitMix64 rng(32);
    const auto seq = random_sequence(rng, 2, 5, 4);
    const auto u = fuse_conditions({{SourceId::local(1), seq, {}}});
    CHECK(u.token_count() == 3);
    CHECK(u.provenance[0].kind == TokenKind::cls);
    CHECK(u.provenance[1].kind == TokenKind::reg);
    CHECK(u.provenance[2].kind == TokenKind::reg);
    CHECK(columns_of(u, SourceId::local(1)).empty());
}

TEST_CASE("columns of a source") {
    SplitMix64 rng(33);
    const auto u = fuse_conditions({{SourceId::local(1), random_sequence(rng, 2, 6, 4), TokenIndexSet{{0, 2, 5}}}});
    CHECK(columns_of(u, SourceId::local(1)) == std::vector<std::size_t>{3, 4, 5});

    const auto two = fuse_conditions({{SourceId::local(1), random_sequence(rng, 0, 4, 4), TokenIndexSet{{1}}},
                                      {SourceId::local(2), random_sequence(rng, 0, 4, 4), TokenIndexSet{{3}}}});
    CHECK(columns_of(two, SourceId::local(2)) == std::vector<std::size_t>{3});
    try {
        columns_of(two, SourceId::global());
        FAIL("expected a lookup error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::lookup);
    }
}

TEST_CASE("random fusions: counts, verbatim rows, provenance and ordering") {
    SplitMix64 rng(34);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t r = oracle::random_between(rng, 0, 4), dim = 4 * oracle::random_between(rng, 1, 4);
        const std::size_t k = oracle::random_between(rng, 1, 4);
        std::vector<ConditionSource> sources;
        const bool with_global = rng.uniform() < 0.7;
        if (with_global) {
            const std::size_t p = oracle::random_between(rng, 1, 20);
            sources.push_back({SourceId::global(), random_sequence(rng, r, p, dim),
                               TokenIndexSet{oracle::random_subset(rng, p, 0.5)}});
        }
        for (std::size_t s = 1; s <= k; ++s) {
            const std::size_t p = oracle::random_between(rng, 1, 20);
            sources.push_back({SourceId::local(s), random_sequence(rng, r, p, dim),
                               TokenIndexSet{oracle::random_subset(rng, p, rng.uniform())}});
        }
        const auto u = fuse_conditions(sources);
        std::size_t expected = 0;
        for (const auto& s : sources) expected += 1 + r + s.selection.size();
        CHECK(u.token_count() == expected);
        CHECK(u.provenance.size() == expected);

        // Locals first in input order, global last.
        std::size_t row = 0;
        std::vector<const ConditionSource*> order;
        for (const auto& s : sources) {
            if (!s.id.is_global()) order.push_back(&s);
        }
        if (with_global) order.push_back(&sources.front());
        for (const auto* s : order) {
            CHECK(u.provenance[row].kind == TokenKind::cls);
            CHECK(u.provenance[row].source == s->id);
            const auto src = s->tokens.tokens.row(0);
            CHECK(std::equal(src.begin(), src.end(), u.matrix.row(row).begin()));
            row += 1 + r;
            for (auto p : s->selection.indices) {
                CHECK(u.provenance[row].patch_index == p);
                const auto a = s->tokens.tokens.row(s->tokens.layout.patch_position(p));
                CHECK(std::equal(a.begin(), a.end(), u.matrix.row(row).begin()));
                ++row;
            }
            CHECK(columns_of(u, s->id) == scan_patch_rows(u, s->id));
        }
        CHECK(row == expected);
        CHECK(parse_provenance(format_provenance(u)) == u.provenance);
    }
}

TEST_CASE("adding a source adds exactly its own rows") {
    SplitMix64 rng(35);
    std::vector<ConditionSource> sources;
    std::size_t previous = 0;
    for (std::size_t k = 1; k <= 4; ++k) {
        sources.push_back({SourceId::local(k), random_sequence(rng, 2, 8, 4),
                           TokenIndexSet{oracle::random_subset(rng, 8, 0.4)}});
        const auto u = fuse_conditions(sources);
        CHECK(u.token_count() - previous == 3 + sources.back().selection.size());
        previous = u.token_count();
    }
}

TEST_CASE("fusion errors") {
    SplitMix64 rng(36);
    const auto a = random_sequence(rng, 2, 4, 4);
    const auto wide = random_sequence(rng, 2, 4, 8);
    const auto fewer_regs = random_sequence(rng, 1, 4, 4);
    auto category = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.category();
        }
        return ErrorCategory::numeric;
    };
    CHECK(category([&] { fuse_conditions({{SourceId::local(1), a, {}}, {SourceId::local(2), wide, {}}}); }) ==
          ErrorCategory::fusion);
    CHECK(category([&] { fuse_conditions({{SourceId::local(1), a, {}}, {SourceId::local(2), fewer_regs, {}}}); }) ==
          ErrorCategory::fusion);
    CHECK_THROWS_AS(fuse_conditions({{SourceId::local(1), a, {}}, {SourceId::local(1), a, {}}}), Error);
    CHECK_THROWS_AS(fuse_conditions({{SourceId::local(1), a, TokenIndexSet{{4}}}}), Error);
    CHECK_THROWS_AS(parse_provenance("PROVENANCE 1\n0 local1 patch -\n"), Error);
    CHECK_THROWS_AS(parse_provenance("PROVENANCE 1\n0 local1 PATCH -\n"), Error);
    CHECK_THROWS_AS(parse_provenance("PROVENANCE 2\n0 local1 CLS -\n"), Error);
}
