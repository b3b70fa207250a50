#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gmpxx.h>
#include <gtest/gtest.h>

#include "mlc/positions.hpp"

namespace {

using namespace mlc;

// ceil(log2 C(n,k)) via GMP, independent of the library's cpp_int path
std::size_t oracle_body_bits(unsigned long n, unsigned long k) {
    mpz_class c;
    mpz_bin_uiui(c.get_mpz_t(), n, k);
    if (c <= 1) return 0;
    mpz_class m = c - 1;
    return mpz_sizeinbase(m.get_mpz_t(), 2);
}

MaskSet random_mask(std::mt19937_64& rng, std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return MaskSet(n, idx);
}

TEST(MaskSet, RejectsUnsortedOrOutOfRange) {
    EXPECT_THROW(MaskSet(4, {2, 1}), ConfigError);
    EXPECT_THROW(MaskSet(4, {4}), ConfigError);
    EXPECT_THROW(MaskSet(4, {1, 1}), ConfigError);
}

TEST(MaskSet, KeptIsComplement) {
    const MaskSet m(6, {1, 4});
    EXPECT_EQ(m.kept(), (std::vector<std::size_t>{0, 2, 3, 5}));
    EXPECT_EQ(MaskSet::from_bitmap(m.bitmap()), m);
}

TEST(Enumerative, EightChooseTwoBody) {
    const auto c = encode_enumerative(MaskSet(8, {1, 5}));
    EXPECT_EQ(c.body_bits, 5u);
    EXPECT_EQ(decode_enumerative(c.bytes), MaskSet(8, {1, 5}));
}

TEST(Enumerative, EmptyMaskHasEmptyBody) {
    const auto c = encode_enumerative(MaskSet(100, {}));
    EXPECT_EQ(c.body_bits, 0u);
    EXPECT_EQ(decode_enumerative(c.bytes), MaskSet(100, {}));
}

TEST(Enumerative, BodyMatchesBigIntegerOracle) {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 500; ++it) {
        const std::size_t n = 1 + rng() % 4096;
        const std::size_t k = rng() % (n + 1);
        const auto m = random_mask(rng, n, k);
        const auto c = encode_enumerative(m);
        ASSERT_EQ(c.body_bits, oracle_body_bits(n, k)) << "N=" << n << " k=" << k;
        ASSERT_EQ(decode_enumerative(c.bytes), m);
    }
}

TEST(Rle, AllKeptIsTiny) {
    const auto c = encode_rle(MaskSet(1000, {}));
    EXPECT_LE(c.bytes.size(), 6u);
    EXPECT_EQ(decode_rle(c.bytes), MaskSet(1000, {}));
}

TEST(Rle, AlternatingIsWorseThanEnumerative) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i < 64; i += 2) idx.push_back(i);
    const MaskSet m(64, idx);
    EXPECT_GT(encode_rle(m).bit_length, encode_enumerative(m).bit_length);
    EXPECT_EQ(encode_enumerative(m).body_bits, 61u);
    EXPECT_EQ(decode_rle(encode_rle(m).bytes), m);
}

TEST(Rle, BlockIsBetterThanEnumerative) {
    std::vector<std::size_t> idx(50);
    std::iota(idx.begin(), idx.end(), 400);
    const MaskSet m(1050, idx);
    EXPECT_LT(encode_rle(m).bit_length, encode_enumerative(m).bit_length);
    const auto mc = encode_min(m);
    EXPECT_EQ(mc.chosen, PositionCoder::rle);
    EXPECT_EQ(decode_min(mc.code.bytes), m);
}

TEST(MinCoder, NeverWorseThanEitherPlusOne) {
    std::mt19937_64 rng(12);
    for (int it = 0; it < 2000; ++it) {
        const std::size_t n = 1 + rng() % 600;
        MaskSet m;
        if (it % 2 == 0) {
            m = random_mask(rng, n, rng() % (n + 1));
        } else {
            std::vector<bool> bits(n);
            bool on = rng() % 2;
            for (std::size_t i = 0; i < n; ++i) {
                if (rng() % 40 == 0) on = !on;
                bits[i] = on;
            }
            m = MaskSet::from_bitmap(bits);
        }
        const auto mc = encode_min(m);
        ASSERT_LE(mc.code.bit_length, encode_enumerative(m).bit_length + 1);
        ASSERT_LE(mc.code.bit_length, encode_rle(m).bit_length + 1);
        ASSERT_EQ(decode_min(mc.code.bytes), m);
    }
}

TEST(MinCoder, HalfDensityNearBinaryEntropy) {
    std::mt19937_64 rng(13);
    const auto m = random_mask(rng, 10000, 5000);
    const auto mc = encode_min(m);
    EXPECT_EQ(mc.chosen, PositionCoder::enumerative);
    EXPECT_NEAR(static_cast<double>(mc.code.body_bits), 10000.0, 100.0);
}

TEST(MinCoder, SinglePosition) {
    for (const MaskSet& m : {MaskSet(1, {0}), MaskSet(1, {})}) {
        const auto mc = encode_min(m);
        // selector bit + varint N + varint k, empty body
        EXPECT_LE(mc.code.bytes.size(), 3u);
        EXPECT_EQ(decode_min(mc.code.bytes), m);
    }
}

TEST(MinCoder, EmptySequence) {
    const auto mc = encode_min(MaskSet(0, {}));
    EXPECT_EQ(decode_min(mc.code.bytes), MaskSet(0, {}));
}

TEST(MinCoder, TruncatedStreamThrows) {
    std::mt19937_64 rng(14);
    const auto m = random_mask(rng, 2000, 700);
    auto bytes = encode_min(m).code.bytes;
    bytes.resize(bytes.size() / 2);
    EXPECT_THROW(decode_min(bytes), Error);
}

}  // namespace
