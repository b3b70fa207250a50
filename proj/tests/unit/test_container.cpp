#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mlc/bit_io.hpp"
#include "mlc/container.hpp"

namespace {

using namespace mlc;

Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len) {
    Bytes b(rng() % (max_len + 1));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    return b;
}

Payload random_payload(std::mt19937_64& rng) {
    Payload p;
    p.codec = static_cast<CodecId>(1 + rng() % 3);
    auto& c = p.config;
    c.p_mask = Rational{rng() % 100, 1 + rng() % 100};
    c.window = rng() % 5000;
    c.max_run = rng() % 64;
    c.k = rng() % 300;
    c.mode = static_cast<FallbackMode>(rng() % 3);
    c.beta = Rational{rng() % 10, 1 + rng() % 10};
    c.vocab_size = static_cast<std::uint32_t>(1 + rng() % 70000);
    c.token_count = rng();
    c.char_count = rng() % 1000000;
    c.aux_order = static_cast<std::uint32_t>(rng() % 2);
    c.scale_bits = kScaleBits;
    c.options = rng() % 4;
    for (Bytes* s : {&p.positions, &p.kept, &p.flags, &p.ranks, &p.fallback}) *s = random_bytes(rng, 300);
    return p;
}

TEST(Crc32, StandardCheckValue) {
    const std::string s = "123456789";
    EXPECT_EQ(detail::crc32(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())),
              0xCBF43926u);
}

TEST(Container, RandomRoundtrips) {
    std::mt19937_64 rng(81);
    for (int it = 0; it < 1000; ++it) {
        const auto p = random_payload(rng);
        ASSERT_EQ(read_payload(write_payload(p)), p);
    }
}

TEST(Container, EmptyStreamsAreMinimal) {
    const Payload p;
    const auto bytes = write_payload(p);
    EXPECT_LE(bytes.size(), 32u);
    EXPECT_EQ(read_payload(bytes), p);
    EXPECT_EQ(ledger_of(p).stream_bits(), 0u);
    EXPECT_EQ(ledger_of(p).container_bits, 8 * bytes.size());
}

TEST(Container, EveryFlippedByteIsDetected) {
    std::mt19937_64 rng(82);
    for (int it = 0; it < 1000; ++it) {
        const auto bytes = write_payload(random_payload(rng));
        auto bad = bytes;
        const auto i = rng() % bad.size();
        bad[i] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        if (i < kMagic.size()) {
            ASSERT_THROW(read_payload(bad), BadMagicError);
        } else {
            try {
                (void)read_payload(bad);
                FAIL() << "flip at byte " << i << " went unnoticed";
            } catch (const BadCrcError&) {
            } catch (const TruncatedError&) {
            }
        }
    }
}

TEST(Container, TruncationIsReported) {
    std::mt19937_64 rng(83);
    for (int it = 0; it < 300; ++it) {
        const auto bytes = write_payload(random_payload(rng));
        const auto cut = Bytes(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(rng() % bytes.size()));
        ASSERT_THROW(read_payload(cut), FormatError);
    }
    EXPECT_THROW(read_payload(Bytes{'M', 'L'}), TruncatedError);
    EXPECT_THROW(read_payload(Bytes{'M', 'L', 'C', '1', 0}), TruncatedError);
    EXPECT_THROW(read_payload(Bytes{'X', 'L', 'C', '1', 0, 0, 0, 0, 0}), BadMagicError);
}

TEST(Container, UnknownVersionWithValidCrc) {
    ByteWriter w;
    w.put_bytes(kMagic);
    w.put_varint(2);
    for (int i = 0; i < 40; ++i) w.put_varint(0);
    w.put_u32le(detail::crc32(w.bytes()));
    EXPECT_THROW(read_payload(w.bytes()), UnknownVersionError);
}

TEST(Container, LedgerTotalIsFileSize) {
    std::mt19937_64 rng(84);
    for (int it = 0; it < 100; ++it) {
        const auto p = random_payload(rng);
        EXPECT_EQ(ledger_of(p).total_bits(), 8 * write_payload(p).size());
    }
}

TEST(Varint, Roundtrip) {
    ByteWriter w;
    const std::vector<std::uint64_t> vals{0, 1, 127, 128, 300, 1ull << 35, ~0ull};
    for (const auto v : vals) w.put_varint(v);
    ByteReader r(w.bytes());
    for (const auto v : vals) EXPECT_EQ(r.get_varint(), v);
    EXPECT_THROW(r.get_varint(), TruncatedError);
}

}  // namespace
