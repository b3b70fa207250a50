#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mlc/metrics.hpp"

namespace {

using namespace mlc;

// Full-matrix Wagner-Fischer, kept separate from the library's two-row version.
std::size_t oracle_distance(const std::u32string& a, const std::u32string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
    return d[a.size()][b.size()];
}

std::u32string random_string(std::mt19937_64& rng, std::size_t max_len, char32_t alphabet) {
    std::u32string s(rng() % (max_len + 1), U'a');
    for (auto& c : s) c = U'a' + static_cast<char32_t>(rng() % alphabet);
    return s;
}

TEST(Levenshtein, MatchesOracleOnRandomPairs) {
    std::mt19937_64 rng(71);
    for (int it = 0; it < 10000; ++it) {
        const auto a = random_string(rng, 64, 1 + rng() % 6);
        const auto b = random_string(rng, 64, 1 + rng() % 6);
        ASSERT_EQ(levenshtein(a, b), oracle_distance(a, b));
    }
}

TEST(CharFidelity, HandValues) {
    EXPECT_DOUBLE_EQ(char_fidelity(U"abcd", U"abce"), 0.75);
    EXPECT_DOUBLE_EQ(char_fidelity(U"same", U"same"), 1.0);
    EXPECT_DOUBLE_EQ(char_fidelity(U"", U"x"), 0.0);
    EXPECT_DOUBLE_EQ(char_fidelity(U"", U""), 1.0);
    EXPECT_DOUBLE_EQ(char_fidelity(U"ab", U"abcd"), 0.5);
}

TEST(CharFidelity, SymmetricAndReflexive) {
    std::mt19937_64 rng(72);
    for (int it = 0; it < 2000; ++it) {
        const auto a = random_string(rng, 40, 4);
        const auto b = random_string(rng, 40, 4);
        ASSERT_DOUBLE_EQ(char_fidelity(a, b), char_fidelity(b, a));
        ASSERT_DOUBLE_EQ(char_fidelity(a, a), 1.0);
        const double f = char_fidelity(a, b);
        ASSERT_GE(f, 0.0);
        ASSERT_LE(f, 1.0);
    }
}

TEST(Chrf, Conventions) {
    EXPECT_DOUBLE_EQ(chrf(U"hello world", U"hello world"), 1.0);
    EXPECT_DOUBLE_EQ(chrf(U"", U""), 1.0);
    EXPECT_DOUBLE_EQ(chrf(U"", U"a"), 0.0);
    EXPECT_DOUBLE_EQ(chrf(U"abc", U"xyz"), 0.0);
}

TEST(Chrf, HandValue) {
    // unigrams: P = R = 1/2; bigrams: no match; averaged P = R = 1/4
    EXPECT_DOUBLE_EQ(chrf(U"ab", U"ac"), 0.25);
}

TEST(Chrf, RecallWeighted) {
    // a short exact prefix has full precision but partial recall
    const double prefix = chrf(U"abcdefgh", U"abcd");
    const double padded = chrf(U"abcd", U"abcdefgh");
    EXPECT_GT(padded, prefix);
}

TEST(Bpc, Accounting) {
    CostLedger l;
    l.tok_bits = 700;
    l.container_bits = 100;
    EXPECT_DOUBLE_EQ(bpc(l, 100), 8.0);
    CostLedger c;
    c.container_bits = 240;
    EXPECT_DOUBLE_EQ(bpc(c, 30), 8.0);
    EXPECT_THROW(bpc(l, 0), ConfigError);
}

TEST(AmortisedBpc, StaticSizeSpreadOverCopies) {
    CostLedger l;
    l.static_bits = 8'000'000;
    l.n_copies = 1;
    EXPECT_DOUBLE_EQ(amortised_bpc(l, 1'000'000), 8.0);
    l.tok_bits = 4000;
    double prev = 1e300;
    for (const std::uint64_t n : {1ull, 10ull, 1000ull, 1'000'000'000'000ull}) {
        l.n_copies = n;
        const double a = amortised_bpc(l, 1000);
        EXPECT_LT(a, prev);
        prev = a;
    }
    EXPECT_NEAR(prev, bpc(l, 1000), 1e-6);
    l.n_copies = 0;
    EXPECT_THROW(amortised_bpc(l, 1000), ConfigError);
}

}  // namespace
