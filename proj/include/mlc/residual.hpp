#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlc/codec_pm.hpp"
#include "mlc/entropy/adaptive.hpp"
#include "mlc/error.hpp"
#include "mlc/payload.hpp"
#include "mlc/predictor.hpp"

namespace mlc {

enum class CorrectionKind : std::uint8_t { rank, fallback, skip };

struct Correction {
    CorrectionKind kind = CorrectionKind::skip;
    std::uint32_t rank = 0;

    friend bool operator==(const Correction&, const Correction&) = default;
};

// Symbols of the correction stream: ranks first_rank..k, then FB and SKIP when present.
// EPC uses first_rank 2 (rank 1 is what a clear flag means); the patcher uses 1.
struct RankAlphabet {
    std::uint32_t first_rank = 2;
    std::uint32_t k = 4;
    bool has_fallback = true;
    bool has_skip = false;

    static RankAlphabet for_mode(std::uint32_t first_rank, std::uint32_t k, FallbackMode mode) {
        return RankAlphabet{first_rank, k, mode != FallbackMode::off, mode != FallbackMode::full};
    }

    [[nodiscard]] std::uint32_t rank_symbols() const noexcept { return k - first_rank + 1; }
    [[nodiscard]] std::size_t size() const noexcept {
        return rank_symbols() + (has_fallback ? 1 : 0) + (has_skip ? 1 : 0);
    }

    [[nodiscard]] std::uint32_t symbol(const Correction& c) const {
        switch (c.kind) {
            case CorrectionKind::rank:
                if (c.rank < first_rank || c.rank > k) throw CodingError("rank " + std::to_string(c.rank) + " outside alphabet");
                return c.rank - first_rank;
            case CorrectionKind::fallback:
                if (!has_fallback) throw CodingError("fallback symbol not in alphabet");
                return rank_symbols();
            case CorrectionKind::skip:
                if (!has_skip) throw CodingError("skip symbol not in alphabet");
                return rank_symbols() + (has_fallback ? 1 : 0);
        }
        throw CodingError("unknown correction kind");
    }

    [[nodiscard]] Correction correction(std::uint32_t sym) const {
        if (sym < rank_symbols()) return {CorrectionKind::rank, sym + first_rank};
        std::uint32_t rest = sym - rank_symbols();
        if (has_fallback) {
            if (rest == 0) return {CorrectionKind::fallback, 0};
            --rest;
        }
        if (has_skip && rest == 0) return {CorrectionKind::skip, 0};
        throw IntegrityError("correction symbol " + std::to_string(sym) + " outside alphabet");
    }
};

// Flags, one correction per set flag (in flag order), and the fallback tokens in order.
struct ResidualStreams {
    std::vector<std::uint8_t> flags;
    std::vector<Correction> corrections;
    std::vector<Token> fallback_tokens;
    // flag indices that received a fallback token
    std::vector<std::size_t> fallback_positions;

    [[nodiscard]] std::size_t skip_count() const {
        std::size_t n = 0;
        for (const auto& c : corrections) n += c.kind == CorrectionKind::skip ? 1 : 0;
        return n;
    }

    friend bool operator==(const ResidualStreams&, const ResidualStreams&) = default;
};

// Every non-SKIP position is certified, so SKIPs / |M| bounds the masked-set error rate.
inline double epc_error_bound(const ResidualStreams& r, std::size_t masked_count) {
    if (masked_count == 0) return 0.0;
    return static_cast<double>(r.skip_count()) / static_cast<double>(masked_count);
}

struct FlaggedPosition {
    std::size_t flag_index = 0;
    // 1-based rank in the effective candidate list, absent when the truth is not listed
    std::optional<std::size_t> rank;
    Token truth = 0;
};

// Ranks up to K become rank symbols. Beyond K: full mode always falls back, budget mode falls back
// for the first `budget` such positions in flag order, everything else is SKIP.
inline ResidualStreams build_residual(std::size_t n_flags, const std::vector<FlaggedPosition>& flagged,
                                      const RankAlphabet& alphabet, FallbackMode mode, std::size_t budget) {
    ResidualStreams r;
    r.flags.assign(n_flags, 0);
    std::size_t spent = 0;
    for (const auto& f : flagged) {
        r.flags.at(f.flag_index) = 1;
        if (f.rank && *f.rank >= alphabet.first_rank && *f.rank <= alphabet.k) {
            r.corrections.push_back({CorrectionKind::rank, static_cast<std::uint32_t>(*f.rank)});
        } else if (mode == FallbackMode::full || (mode == FallbackMode::budget && spent < budget)) {
            ++spent;
            r.corrections.push_back({CorrectionKind::fallback, 0});
            r.fallback_tokens.push_back(f.truth);
            r.fallback_positions.push_back(f.flag_index);
        } else {
            r.corrections.push_back({CorrectionKind::skip, 0});
        }
    }
    return r;
}

struct ResidualCoded {
    Bytes flags;
    Bytes ranks;
    Bytes fallback;
    double fallback_ideal_bits = 0.0;
};

inline ResidualCoded encode_residual(const ResidualStreams& r, const RankAlphabet& alphabet, std::uint32_t vocab,
                                     const FreqTable* rank_table = nullptr) {
    ResidualCoded out;
    out.flags = detail::stream_or_empty(adaptive_bernoulli_encode(r.flags));
    std::vector<std::uint32_t> symbols;
    symbols.reserve(r.corrections.size());
    for (const auto& c : r.corrections) symbols.push_back(alphabet.symbol(c));
    out.ranks = detail::stream_or_empty(adaptive_symbol_encode(symbols, alphabet.size(), rank_table));
    auto fb = adaptive_vway_encode(r.fallback_tokens, vocab);
    out.fallback_ideal_bits = fb.ideal_bits;
    out.fallback = detail::stream_or_empty(std::move(fb.stream));
    return out;
}

inline ResidualStreams decode_residual(const Payload& p, std::size_t n_flags, const RankAlphabet& alphabet,
                                       const FreqTable* rank_table = nullptr) {
    ResidualStreams r;
    if (n_flags == 0) {
        detail::expect_empty(p.flags, "flag");
    } else {
        r.flags = detail::decode_stream("flag", [&] { return adaptive_bernoulli_decode(p.flags, n_flags); });
    }
    std::size_t n_set = 0;
    for (const auto f : r.flags) n_set += f;
    if (n_set == 0) {
        detail::expect_empty(p.ranks, "rank");
    } else {
        const auto symbols = detail::decode_stream(
            "rank", [&] { return adaptive_symbol_decode(p.ranks, n_set, alphabet.size(), rank_table); });
        for (const auto s : symbols) r.corrections.push_back(alphabet.correction(s));
    }
    std::size_t j = 0;
    for (std::size_t i = 0; i < r.flags.size(); ++i) {
        if (!r.flags[i]) continue;
        if (r.corrections[j++].kind == CorrectionKind::fallback) r.fallback_positions.push_back(i);
    }
    if (r.fallback_positions.empty()) {
        detail::expect_empty(p.fallback, "fallback");
    } else {
        r.fallback_tokens = detail::decode_stream("fallback", [&] {
            return adaptive_vway_decode(p.fallback, r.fallback_positions.size(), p.config.vocab_size);
        });
    }
    return r;
}

}  // namespace mlc
