#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mlc/bit_io.hpp"
#include "mlc/error.hpp"

namespace mlc {

// Masked index set M over {0..n-1}; the kept set is the complement.
struct MaskSet {
    std::size_t n = 0;
    std::vector<std::size_t> masked;  // strictly increasing

    MaskSet() = default;
    MaskSet(std::size_t size, std::vector<std::size_t> indices) : n(size), masked(std::move(indices)) {
        for (std::size_t i = 0; i < masked.size(); ++i) {
            if (masked[i] >= n || (i > 0 && masked[i] <= masked[i - 1]))
                throw ConfigError("mask indices must be strictly increasing and below n");
        }
    }

    static MaskSet from_bitmap(const std::vector<bool>& bits) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < bits.size(); ++i)
            if (bits[i]) idx.push_back(i);
        return MaskSet(bits.size(), std::move(idx));
    }

    [[nodiscard]] std::vector<bool> bitmap() const {
        std::vector<bool> bits(n, false);
        for (const auto i : masked) bits[i] = true;
        return bits;
    }

    [[nodiscard]] std::vector<std::size_t> kept() const {
        std::vector<std::size_t> out;
        out.reserve(n - masked.size());
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (j < masked.size() && masked[j] == i) ++j;
            else out.push_back(i);
        }
        return out;
    }

    [[nodiscard]] std::size_t masked_count() const noexcept { return masked.size(); }
    [[nodiscard]] std::size_t kept_count() const noexcept { return n - masked.size(); }

    friend bool operator==(const MaskSet&, const MaskSet&) = default;
};

// A bit-packed position stream. bytes is zero-padded to a whole byte; bit_length is exact.
struct PositionCode {
    Bytes bytes;
    std::size_t bit_length = 0;
    std::size_t body_bits = 0;

    [[nodiscard]] std::size_t exact_bits() const noexcept { return bit_length; }
};

enum class PositionCoder : std::uint8_t { enumerative = 0, rle = 1 };

namespace detail {

using BigUint = boost::multiprecision::cpp_int;

inline BigUint binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    BigUint c = 1;
    for (std::size_t j = 1; j <= k; ++j) {
        c *= static_cast<std::uint64_t>(n - k + j);
        c /= static_cast<std::uint64_t>(j);
    }
    return c;
}

// ceil(log2 c) for c >= 1.
inline std::size_t ceil_log2(const BigUint& c) {
    if (c <= 1) return 0;
    return static_cast<std::size_t>(boost::multiprecision::msb(BigUint(c - 1))) + 1;
}

inline void append_bits(BitWriter& w, std::span<const std::uint8_t> bytes, std::size_t nbits) {
    for (std::size_t i = 0; i < nbits; ++i) w.put_bit((bytes[i / 8] >> (7 - i % 8)) & 1u);
}

// Walks positions n-1..0 keeping B = C(pos, i), where i is the number of masked indices not yet
// visited. Combinatorial number system: rank = sum over masked c_1 < ... < c_k of C(c_j, j).
inline void write_enumerative(BitWriter& w, const MaskSet& mask, std::size_t& body_bits) {
    const std::size_t n = mask.n;
    const std::size_t k = mask.masked.size();
    w.put_varint(n);
    w.put_varint(k);
    const BigUint total = binomial(n, k);
    body_bits = ceil_log2(total);
    if (body_bits == 0) return;

    BigUint rank = 0;
    BigUint b = binomial(n - 1, k);
    std::size_t i = k;
    std::size_t next = k;  // masked[next-1] is the highest unvisited masked index
    for (std::size_t pos = n; pos-- > 0 && i > 0;) {
        const bool one = next > 0 && mask.masked[next - 1] == pos;
        if (one) {
            rank += b;
            --next;
            if (pos > 0) {
                b *= static_cast<std::uint64_t>(i);
                b /= static_cast<std::uint64_t>(pos);
            }
            --i;
        } else if (pos > 0) {
            b *= static_cast<std::uint64_t>(pos - i);
            b /= static_cast<std::uint64_t>(pos);
        }
    }

    Bytes raw;
    boost::multiprecision::export_bits(rank, std::back_inserter(raw), 8, true);
    const std::size_t have = rank == 0 ? 0 : boost::multiprecision::msb(rank) + 1;
    for (std::size_t j = have; j < body_bits; ++j) w.put_bit(false);
    const std::size_t skip = raw.size() * 8 - have;
    for (std::size_t j = 0; j < have; ++j) {
        const std::size_t bit = skip + j;
        w.put_bit((raw[bit / 8] >> (7 - bit % 8)) & 1u);
    }
}

inline MaskSet read_enumerative(BitReader& r) {
    const auto n = r.get_varint();
    const auto k = r.get_varint();
    if (k > n) throw IntegrityError("position stream: more masked than total positions");
    if (n > (1ull << 32)) throw IntegrityError("position stream: implausible sequence length");
    const BigUint total = binomial(n, k);
    const std::size_t width = ceil_log2(total);

    Bytes raw((width + 7) / 8, 0);
    const std::size_t pad = raw.size() * 8 - width;
    for (std::size_t j = 0; j < width; ++j) {
        if (r.get_bit()) {
            const std::size_t bit = pad + j;
            raw[bit / 8] |= static_cast<std::uint8_t>(0x80u >> (bit % 8));
        }
    }
    BigUint rank = 0;
    if (!raw.empty()) boost::multiprecision::import_bits(rank, raw.begin(), raw.end(), 8, true);
    if (rank >= total) throw IntegrityError("position stream: enumerative rank out of range");

    std::vector<std::size_t> masked(k);
    BigUint b = binomial(n - (n > 0 ? 1 : 0), k);
    if (n == 0) b = 0;
    std::size_t i = k;
    for (std::size_t pos = n; pos-- > 0 && i > 0;) {
        if (rank >= b) {
            rank -= b;
            masked[i - 1] = pos;
            if (pos > 0) {
                b *= static_cast<std::uint64_t>(i);
                b /= static_cast<std::uint64_t>(pos);
            }
            --i;
        } else if (pos > 0) {
            b *= static_cast<std::uint64_t>(pos - i);
            b /= static_cast<std::uint64_t>(pos);
        }
    }
    if (i != 0) throw IntegrityError("position stream: enumerative decode did not place every index");
    return MaskSet(n, std::move(masked));
}

// Alternating runs starting with kept. The first run is coded as gamma(len+1) since it may be
// empty; later runs are >= 1. Coding stops once either class is exhausted, the rest is implied.
inline void write_rle(BitWriter& w, const MaskSet& mask, std::size_t& body_bits) {
    const std::size_t n = mask.n;
    const std::size_t k = mask.masked.size();
    w.put_varint(n);
    w.put_varint(k);
    const std::size_t start = w.bit_length();
    const auto bits = mask.bitmap();
    std::size_t kept_used = 0;
    std::size_t masked_used = 0;
    std::size_t pos = 0;
    bool kept_run = true;
    bool first = true;
    while (kept_used < n - k && masked_used < k) {
        std::size_t len = 0;
        while (pos < n && bits[pos] != kept_run) {
            ++len;
            ++pos;
        }
        w.put_gamma(first ? len + 1 : len);
        (kept_run ? kept_used : masked_used) += len;
        first = false;
        kept_run = !kept_run;
    }
    body_bits = w.bit_length() - start;
}

inline MaskSet read_rle(BitReader& r) {
    const auto n = r.get_varint();
    const auto k = r.get_varint();
    if (k > n) throw IntegrityError("position stream: more masked than total positions");
    if (n > (1ull << 32)) throw IntegrityError("position stream: implausible sequence length");
    std::vector<std::size_t> masked;
    masked.reserve(k);
    std::uint64_t kept_used = 0;
    std::uint64_t pos = 0;
    bool kept_run = true;
    bool first = true;
    while (kept_used < n - k && masked.size() < k) {
        std::uint64_t len = r.get_gamma();
        if (first) --len;
        else if (len == 0) throw IntegrityError("position stream: empty run");
        if (pos + len > n) throw IntegrityError("position stream: runs exceed sequence length");
        if (kept_run) {
            kept_used += len;
        } else {
            if (masked.size() + len > k) throw IntegrityError("position stream: too many masked positions");
            for (std::uint64_t j = 0; j < len; ++j) masked.push_back(pos + j);
        }
        if (kept_used > n - k) throw IntegrityError("position stream: too many kept positions");
        pos += len;
        first = false;
        kept_run = !kept_run;
    }
    // whichever class is exhausted, the remainder belongs to the other
    if (masked.size() < k)
        for (; pos < n; ++pos) masked.push_back(pos);
    if (masked.size() != k) throw IntegrityError("position stream: masked count mismatch");
    return MaskSet(n, std::move(masked));
}

}  // namespace detail

// [varint N][varint k][ceil(log2 C(N,k)) bits of combinatorial rank], MSB-first.
inline PositionCode encode_enumerative(const MaskSet& mask) {
    BitWriter w;
    PositionCode out;
    detail::write_enumerative(w, mask, out.body_bits);
    out.bit_length = w.bit_length();
    out.bytes = w.take();
    return out;
}

inline MaskSet decode_enumerative(std::span<const std::uint8_t> bytes) {
    BitReader r(bytes);
    return detail::read_enumerative(r);
}

// [varint N][varint k][Elias-gamma run lengths].
inline PositionCode encode_rle(const MaskSet& mask) {
    BitWriter w;
    PositionCode out;
    detail::write_rle(w, mask, out.body_bits);
    out.bit_length = w.bit_length();
    out.bytes = w.take();
    return out;
}

inline MaskSet decode_rle(std::span<const std::uint8_t> bytes) {
    BitReader r(bytes);
    return detail::read_rle(r);
}

struct MinPositionCode {
    PositionCode code;
    PositionCoder chosen = PositionCoder::enumerative;
};

// One selector bit (0 enumerative, 1 RLE) followed by the shorter of the two codes;
// ties go to the enumerative coder.
inline MinPositionCode encode_min(const MaskSet& mask) {
    const auto enumerative = encode_enumerative(mask);
    const auto rle = encode_rle(mask);
    const bool use_rle = rle.bit_length < enumerative.bit_length;
    const auto& pick = use_rle ? rle : enumerative;
    BitWriter w;
    w.put_bit(use_rle);
    detail::append_bits(w, pick.bytes, pick.bit_length);
    MinPositionCode out;
    out.code.body_bits = pick.body_bits;
    out.code.bit_length = w.bit_length();
    out.code.bytes = w.take();
    out.chosen = use_rle ? PositionCoder::rle : PositionCoder::enumerative;
    return out;
}

inline MaskSet decode_min(std::span<const std::uint8_t> bytes) {
    BitReader r(bytes);
    return r.get_bit() ? detail::read_rle(r) : detail::read_enumerative(r);
}

}  // namespace mlc
