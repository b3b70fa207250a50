#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlc/error.hpp"

namespace mlc {

using Bytes = std::vector<std::uint8_t>;

// LEB128 and fixed-width little-endian writes into a growing byte buffer.
class ByteWriter {
public:
    void put_u8(std::uint8_t b) { out_.push_back(b); }

    void put_varint(std::uint64_t v) {
        while (v >= 0x80) {
            out_.push_back(static_cast<std::uint8_t>(v | 0x80));
            v >>= 7;
        }
        out_.push_back(static_cast<std::uint8_t>(v));
    }

    void put_u32le(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

    [[nodiscard]] const Bytes& bytes() const noexcept { return out_; }
    [[nodiscard]] Bytes take() noexcept { return std::move(out_); }

private:
    Bytes out_;
};

// Bounds-checked reader; running off the end throws TruncatedError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t get_u8() {
        need(1);
        return in_[pos_++];
    }

    std::uint64_t get_varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            const std::uint8_t b = get_u8();
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if ((b & 0x80) == 0) return v;
        }
        throw FormatError("varint longer than 10 bytes");
    }

    std::uint32_t get_u32le() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    [[nodiscard]] std::size_t position() const noexcept { return pos_; }
    [[nodiscard]] std::size_t remaining() const noexcept { return in_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw TruncatedError("unexpected end of data");
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

// MSB-first bit packer. The final byte is zero-padded; bit_length() reports the exact count.
class BitWriter {
public:
    void put_bit(bool bit) {
        if (nbits_ % 8 == 0) out_.push_back(0);
        if (bit) out_.back() |= static_cast<std::uint8_t>(0x80u >> (nbits_ % 8));
        ++nbits_;
    }

    // Lowest `width` bits of v, most significant first.
    void put_bits(std::uint64_t v, unsigned width) {
        for (unsigned i = width; i-- > 0;) put_bit((v >> i) & 1u);
    }

    // LEB128 groups written as 8-bit fields.
    void put_varint(std::uint64_t v) {
        while (v >= 0x80) {
            put_bits((v & 0x7f) | 0x80, 8);
            v >>= 7;
        }
        put_bits(v, 8);
    }

    // Elias-gamma; v must be >= 1.
    void put_gamma(std::uint64_t v) {
        unsigned width = 0;
        while ((v >> width) > 1) ++width;
        for (unsigned i = 0; i < width; ++i) put_bit(false);
        put_bits(v, width + 1);
    }

    [[nodiscard]] std::size_t bit_length() const noexcept { return nbits_; }
    [[nodiscard]] const Bytes& bytes() const noexcept { return out_; }
    [[nodiscard]] Bytes take() noexcept { return std::move(out_); }

private:
    Bytes out_;
    std::size_t nbits_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}

    bool get_bit() {
        if (pos_ >= in_.size() * 8) throw IntegrityError("bit stream exhausted");
        const bool b = (in_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
        ++pos_;
        return b;
    }

    std::uint64_t get_bits(unsigned width) {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < width; ++i) v = (v << 1) | static_cast<std::uint64_t>(get_bit());
        return v;
    }

    std::uint64_t get_varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            const auto b = get_bits(8);
            v |= (b & 0x7f) << shift;
            if ((b & 0x80) == 0) return v;
        }
        throw IntegrityError("bit-packed varint longer than 10 groups");
    }

    std::uint64_t get_gamma() {
        unsigned zeros = 0;
        while (!get_bit()) {
            if (++zeros > 63) throw IntegrityError("Elias-gamma prefix too long");
        }
        std::uint64_t v = 1;
        for (unsigned i = 0; i < zeros; ++i) v = (v << 1) | static_cast<std::uint64_t>(get_bit());
        return v;
    }

    [[nodiscard]] std::size_t position() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace mlc
