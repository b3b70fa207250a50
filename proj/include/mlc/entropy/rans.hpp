#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlc/bit_io.hpp"
#include "mlc/entropy/freq_table.hpp"
#include "mlc/error.hpp"

namespace mlc {

// Byte-wise rANS with a 32-bit state kept in [2^23, 2^31).
//
// Layout of a coded stream: renormalization bytes in the order the encoder emitted them,
// then the final state as 4 little-endian bytes. The encoder consumes symbols last-to-first,
// so the decoder reads the state from the tail and walks the bytes backwards while emitting
// symbols in forward order.
inline constexpr std::uint32_t kRansLowerBound = 1u << 23;

struct CodedStream {
    Bytes bytes;
    std::size_t symbol_count = 0;

    [[nodiscard]] std::size_t exact_bits() const noexcept { return 8 * bytes.size(); }
};

// Collects (start, freq) intervals in forward order and encodes them in reverse on finish().
// Adaptive coders record the interval under the model state of each step, so the decoder can
// replay the same model evolution forwards.
class RansEncoder {
public:
    explicit RansEncoder(unsigned scale_bits = kScaleBits) : scale_bits_(scale_bits) {}

    void push(std::uint32_t start, std::uint32_t freq) {
        if (freq == 0 || start + freq > (1u << scale_bits_))
            throw CodingError("rANS interval outside the table range");
        steps_.push_back({start, freq});
    }

    void push(const FreqTable& table, std::size_t symbol) {
        if (symbol >= table.size())
            throw CodingError("symbol " + std::to_string(symbol) + " outside alphabet of size " +
                              std::to_string(table.size()));
        push(table.start(symbol), table.freq(symbol));
    }

    [[nodiscard]] std::size_t size() const noexcept { return steps_.size(); }

    [[nodiscard]] Bytes finish() const {
        Bytes out;
        out.reserve(steps_.size() / 2 + 8);
        std::uint32_t x = kRansLowerBound;
        for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
            const std::uint32_t x_max = ((kRansLowerBound >> scale_bits_) << 8) * it->freq;
            while (x >= x_max) {
                out.push_back(static_cast<std::uint8_t>(x & 0xff));
                x >>= 8;
            }
            x = ((x / it->freq) << scale_bits_) + (x % it->freq) + it->start;
        }
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
        return out;
    }

private:
    struct Step {
        std::uint32_t start;
        std::uint32_t freq;
    };
    std::vector<Step> steps_;
    unsigned scale_bits_;
};

class RansDecoder {
public:
    explicit RansDecoder(std::span<const std::uint8_t> bytes, unsigned scale_bits = kScaleBits)
        : bytes_(bytes), scale_bits_(scale_bits) {
        if (bytes_.size() < 4) throw DecodeError("rANS stream shorter than the 4-byte state");
        pos_ = bytes_.size() - 4;
        state_ = 0;
        for (int i = 0; i < 4; ++i) state_ |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        if (state_ < kRansLowerBound) throw DecodeError("rANS final state below the lower bound");
    }

    [[nodiscard]] std::uint32_t peek() const noexcept { return state_ & ((1u << scale_bits_) - 1); }

    void advance(std::uint32_t start, std::uint32_t freq) {
        state_ = freq * (state_ >> scale_bits_) + (state_ & ((1u << scale_bits_) - 1)) - start;
        while (state_ < kRansLowerBound) {
            if (pos_ == 0) throw DecodeError("rANS state underflow: stream truncated or corrupt");
            state_ = (state_ << 8) | bytes_[--pos_];
        }
    }

    std::size_t decode(const FreqTable& table) {
        const auto s = table.find(peek());
        advance(table.start(s), table.freq(s));
        return s;
    }

    // True once every byte was consumed and the state unwound to its initial value.
    [[nodiscard]] bool exhausted() const noexcept { return pos_ == 0 && state_ == kRansLowerBound; }

    void expect_exhausted() const {
        if (!exhausted()) throw DecodeError("rANS stream has leftover data after the last symbol");
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::uint32_t state_ = 0;
    unsigned scale_bits_;
};

template <typename Symbol>
CodedStream rans_encode(std::span<const Symbol> symbols, const FreqTable& model) {
    RansEncoder enc(model.scale_bits());
    for (const auto s : symbols) {
        if (static_cast<std::uint64_t>(s) >= model.size())
            throw CodingError("symbol " + std::to_string(s) + " outside alphabet of size " +
                              std::to_string(model.size()));
        enc.push(model, static_cast<std::size_t>(s));
    }
    return CodedStream{enc.finish(), symbols.size()};
}

inline CodedStream rans_encode(const std::vector<std::uint32_t>& symbols, const FreqTable& model) {
    return rans_encode(std::span<const std::uint32_t>(symbols), model);
}

inline std::vector<std::uint32_t> rans_decode(std::span<const std::uint8_t> bytes, const FreqTable& model,
                                              std::size_t n) {
    RansDecoder dec(bytes, model.scale_bits());
    std::vector<std::uint32_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint32_t>(dec.decode(model)));
    dec.expect_exhausted();
    return out;
}

inline std::vector<std::uint32_t> rans_decode(const CodedStream& stream, const FreqTable& model) {
    return rans_decode(stream.bytes, model, stream.symbol_count);
}

}  // namespace mlc
