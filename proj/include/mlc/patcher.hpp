#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlc/codec_pm.hpp"
#include "mlc/container.hpp"
#include "mlc/error.hpp"
#include "mlc/payload.hpp"
#include "mlc/predictor.hpp"
#include "mlc/residual.hpp"

namespace mlc {

struct PatchConfig {
    std::uint32_t k = 4;
    FallbackMode mode = FallbackMode::full;
    Rational beta{0, 1};
    // Condition on the whole reconstruction instead of masking every mismatch.
    bool full_context = false;
    const FreqTable* rank_table = nullptr;

    void validate() const {
        if (k < 1) throw ConfigError("patch rank threshold K must be at least 1");
        if (beta.den == 0 || Rational{1, 1} < beta) throw ConfigError("fallback budget beta must lie in [0, 1]");
    }

    [[nodiscard]] std::size_t top_k() const noexcept { return std::max<std::size_t>(k, 64) + 1; }
};

struct PatchEncodeResult {
    Payload payload;
    CostLedger ledger;
    ResidualStreams residual;
};

struct PatchResult {
    TokenSeq tokens;
    ResidualStreams residual;
    double error_bound = 0.0;
};

namespace detail {

inline TokenSeq patch_context(std::span<const Token> reconstructed, std::span<const std::size_t> mismatches,
                              bool full_context) {
    TokenSeq ctx(reconstructed.begin(), reconstructed.end());
    if (!full_context)
        for (const auto i : mismatches) ctx[i] = kHole;
    return ctx;
}

// The reconstructed token is known to be wrong at a flagged position, so it is dropped from the
// ranked list before ranks are assigned.
inline std::vector<Token> candidates_without(const PredictiveDistribution& d, Token wrong) {
    std::vector<Token> out;
    out.reserve(d.top.size());
    for (const auto& c : d.top)
        if (c.token != wrong) out.push_back(c.token);
    return out;
}

}  // namespace detail

// Flags every position where the reconstruction differs and codes a correction per flag: rank in
// 1..K of the predictor's list (reconstructed token excluded), a fallback token, or SKIP.
inline PatchEncodeResult make_patch(std::span<const Token> original, std::span<const Token> reconstructed,
                                    std::uint64_t char_count, const Predictor& predictor, const PatchConfig& cfg) {
    cfg.validate();
    if (original.size() != reconstructed.size())
        throw AlignmentError("original has " + std::to_string(original.size()) + " tokens, reconstruction has " +
                             std::to_string(reconstructed.size()));
    const auto vocab = predictor.vocab_size();
    detail::check_tokens(original, vocab);
    detail::check_tokens(reconstructed, vocab);

    std::vector<std::size_t> mismatches;
    for (std::size_t i = 0; i < original.size(); ++i)
        if (original[i] != reconstructed[i]) mismatches.push_back(i);

    std::vector<FlaggedPosition> flagged;
    if (!mismatches.empty()) {
        const auto ctx = detail::patch_context(reconstructed, mismatches, cfg.full_context);
        const auto dists = predictor.predict(ctx, mismatches, cfg.top_k());
        if (dists.size() != mismatches.size())
            throw PredictorError("predictor returned the wrong number of distributions");
        for (std::size_t j = 0; j < mismatches.size(); ++j) {
            const auto i = mismatches[j];
            const auto list = detail::candidates_without(dists[j], reconstructed[i]);
            std::optional<std::size_t> rank;
            if (const auto it = std::find(list.begin(), list.end(), original[i]); it != list.end())
                rank = static_cast<std::size_t>(it - list.begin()) + 1;
            flagged.push_back({i, rank, original[i]});
        }
    }
    const auto alphabet = RankAlphabet::for_mode(1, cfg.k, cfg.mode);
    const auto budget = static_cast<std::size_t>(cfg.beta.floor_times(mismatches.size()));

    PatchEncodeResult r;
    r.residual = build_residual(original.size(), flagged, alphabet, cfg.mode, budget);
    auto coded = encode_residual(r.residual, alphabet, vocab, cfg.rank_table);

    auto& c = r.payload.config;
    r.payload.codec = CodecId::patch;
    c.p_mask = Rational{0, 1};
    c.window = 0;
    c.max_run = 0;
    c.k = cfg.k;
    c.mode = cfg.mode;
    c.beta = cfg.beta.reduced();
    c.vocab_size = vocab;
    c.token_count = original.size();
    c.char_count = char_count;
    c.options = cfg.full_context ? kOptPatchFullContext : 0;
    r.payload.flags = std::move(coded.flags);
    r.payload.ranks = std::move(coded.ranks);
    r.payload.fallback = std::move(coded.fallback);
    r.ledger = ledger_of(r.payload);
    r.ledger.fallback_ideal_bits = coded.fallback_ideal_bits;
    return r;
}

// Positions with SKIP keep their reconstructed token; the bound is SKIP count / N.
inline PatchResult apply_patch(std::span<const Token> reconstructed, const Payload& p, const Predictor& predictor,
                               const DecodeOptions& opt = {}) {
    if (p.codec != CodecId::patch) throw FormatError("payload is not a patch payload");
    detail::check_vocab(p, predictor);
    const auto& c = p.config;
    if (c.token_count != reconstructed.size())
        throw AlignmentError("patch covers " + std::to_string(c.token_count) + " tokens, reconstruction has " +
                             std::to_string(reconstructed.size()));
    if (c.k < 1 || c.k > 0xFFFFFFFFull) throw IntegrityError("rank threshold K out of range in header");
    for (const auto* s : {&p.positions, &p.kept}) detail::expect_empty(*s, "PM");
    const auto k = static_cast<std::uint32_t>(c.k);
    const auto alphabet = RankAlphabet::for_mode(1, k, c.mode);

    PatchResult out;
    out.residual = decode_residual(p, reconstructed.size(), alphabet, opt.rank_table);
    out.tokens.assign(reconstructed.begin(), reconstructed.end());

    std::vector<std::size_t> mismatches;
    for (std::size_t i = 0; i < out.residual.flags.size(); ++i)
        if (out.residual.flags[i]) mismatches.push_back(i);
    if (!mismatches.empty()) {
        const auto ctx = detail::patch_context(reconstructed, mismatches, (c.options & kOptPatchFullContext) != 0);
        const auto dists = predictor.predict(ctx, mismatches, std::max<std::size_t>(k, 64) + 1);
        if (dists.size() != mismatches.size())
            throw PredictorError("predictor returned the wrong number of distributions");
        std::size_t next_fallback = 0;
        for (std::size_t j = 0; j < mismatches.size(); ++j) {
            const auto i = mismatches[j];
            const auto& corr = out.residual.corrections[j];
            if (corr.kind == CorrectionKind::rank) {
                const auto list = detail::candidates_without(dists[j], reconstructed[i]);
                if (corr.rank > list.size())
                    throw IntegrityError("rank " + std::to_string(corr.rank) + " past the predictor's list at position " +
                                         std::to_string(i));
                out.tokens[i] = list[corr.rank - 1];
            } else if (corr.kind == CorrectionKind::fallback) {
                out.tokens[i] = out.residual.fallback_tokens[next_fallback++];
            }
        }
    }
    out.error_bound = reconstructed.empty() ? 0.0
                                            : static_cast<double>(out.residual.skip_count()) /
                                                  static_cast<double>(reconstructed.size());
    return out;
}

}  // namespace mlc
