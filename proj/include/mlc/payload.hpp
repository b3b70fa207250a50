#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mlc/bit_io.hpp"
#include "mlc/entropy/freq_table.hpp"
#include "mlc/error.hpp"
#include "mlc/rational.hpp"

namespace mlc {

enum class CodecId : std::uint32_t { pm = 1, epc = 2, patch = 3 };

enum class FallbackMode : std::uint32_t { off = 0, budget = 1, full = 2 };

inline std::string_view to_string(CodecId c) {
    switch (c) {
        case CodecId::pm: return "pm";
        case CodecId::epc: return "epc";
        case CodecId::patch: return "patch";
    }
    return "?";
}

inline std::string_view to_string(FallbackMode m) {
    switch (m) {
        case FallbackMode::off: return "off";
        case FallbackMode::budget: return "budget";
        case FallbackMode::full: return "full";
    }
    return "?";
}

inline FallbackMode parse_fallback_mode(std::string_view s) {
    if (s == "off") return FallbackMode::off;
    if (s == "budget") return FallbackMode::budget;
    if (s == "full") return FallbackMode::full;
    throw ConfigError("unknown fallback mode '" + std::string(s) + "' (expected off, budget or full)");
}

inline CodecId parse_codec(std::string_view s) {
    if (s == "pm") return CodecId::pm;
    if (s == "epc") return CodecId::epc;
    if (s == "patch") return CodecId::patch;
    throw ConfigError("unknown codec '" + std::string(s) + "' (expected pm, epc or patch)");
}

// Option bits of PayloadConfig::options.
inline constexpr std::uint64_t kOptPatchFullContext = 1u << 0;

struct PayloadConfig {
    Rational p_mask{0, 1};
    std::uint64_t window = 64;
    std::uint64_t max_run = 16;
    std::uint64_t k = 4;
    FallbackMode mode = FallbackMode::full;
    Rational beta{0, 1};
    std::uint32_t vocab_size = 256;
    std::uint64_t token_count = 0;
    std::uint64_t char_count = 0;
    // fields after char_count extend the base config block
    std::uint32_t aux_order = 0;
    std::uint32_t scale_bits = kScaleBits;
    std::uint64_t options = 0;

    friend bool operator==(const PayloadConfig&, const PayloadConfig&) = default;
};

// Five streams in container order. Streams with zero symbols are stored empty.
struct Payload {
    CodecId codec = CodecId::pm;
    PayloadConfig config;
    Bytes positions;
    Bytes kept;
    Bytes flags;
    Bytes ranks;
    Bytes fallback;

    friend bool operator==(const Payload&, const Payload&) = default;
};

// Per-stream bit accounting. Stream bits are 8x their stored byte length; container bits cover
// magic, header, length prefixes and CRC.
struct CostLedger {
    std::uint64_t pos_bits = 0;
    std::uint64_t tok_bits = 0;
    std::uint64_t flag_bits = 0;
    std::uint64_t rank_bits = 0;
    std::uint64_t fallback_bits = 0;
    std::uint64_t container_bits = 0;

    // exact position code length before byte padding
    std::uint64_t pos_realized_bits = 0;
    double tok_ideal_bits = 0.0;
    double fallback_ideal_bits = 0.0;

    std::uint64_t static_bits = 0;
    std::uint64_t n_copies = 1;

    [[nodiscard]] std::uint64_t stream_bits() const noexcept {
        return pos_bits + tok_bits + flag_bits + rank_bits + fallback_bits;
    }
    [[nodiscard]] std::uint64_t total_bits() const noexcept { return stream_bits() + container_bits; }
};

}  // namespace mlc
