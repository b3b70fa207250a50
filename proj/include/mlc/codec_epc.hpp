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
#include "mlc/recon.hpp"
#include "mlc/residual.hpp"

namespace mlc {

struct EPCConfig {
    PMConfig pm;
    std::uint32_t k = 4;
    FallbackMode mode = FallbackMode::full;
    Rational beta{0, 1};
    // Static rank PMF over the correction alphabet; nullptr selects adaptive counts.
    const FreqTable* rank_table = nullptr;

    void validate() const {
        pm.validate();
        if (k < 2) throw ConfigError("rank threshold K must be at least 2");
        if (beta.den == 0 || Rational{1, 1} < beta) throw ConfigError("fallback budget beta must lie in [0, 1]");
    }

    [[nodiscard]] std::size_t top_k() const noexcept { return std::max<std::size_t>(k, 64); }
};

struct EPCEncodeResult : EncodeResult {
    ResidualStreams residual;
    // rank of the truth per masked position (0 when not listed), for instrumentation
    std::vector<std::size_t> ranks;
};

struct EPCDecodeResult {
    TokenSeq tokens;
    ResidualStreams residual;
    MaskSet mask;
    double error_bound = 0.0;
};

inline EPCEncodeResult epc_compress(std::span<const Token> tokens, std::uint64_t char_count,
                                    const Predictor& predictor, const EPCConfig& cfg) {
    cfg.validate();
    const auto vocab = predictor.vocab_size();
    detail::check_tokens(tokens, vocab);
    EPCEncodeResult r;
    if (cfg.pm.p_mask.num == 0) {
        r.mask = MaskSet(tokens.size(), {});
    } else {
        const auto s = predictor.surprisal(tokens);
        if (s.size() != tokens.size()) throw PredictorError("surprisal vector length differs from token count");
        r.mask = select_mask(s, cfg.pm);
    }
    const auto& m = r.mask.masked;

    std::vector<FlaggedPosition> flagged;
    r.ranks.assign(m.size(), 0);
    if (!m.empty()) {
        TokenSeq ctx(tokens.begin(), tokens.end());
        for (const auto i : m) ctx[i] = kHole;
        const auto dists = predictor.predict(ctx, m, cfg.top_k());
        if (dists.size() != m.size()) throw PredictorError("predictor returned the wrong number of distributions");
        for (std::size_t j = 0; j < m.size(); ++j) {
            const auto rank = dists[j].rank_of(tokens[m[j]]);
            r.ranks[j] = rank.value_or(0);
            if (rank != std::size_t{1}) flagged.push_back({j, rank, tokens[m[j]]});
        }
    }
    const auto alphabet = RankAlphabet::for_mode(2, cfg.k, cfg.mode);
    const auto budget = static_cast<std::size_t>(cfg.beta.floor_times(m.size()));
    r.residual = build_residual(m.size(), flagged, alphabet, cfg.mode, budget);

    auto pk = detail::encode_positions_and_kept(tokens, r.mask, vocab, cfg.pm.aux_order);
    auto coded = encode_residual(r.residual, alphabet, vocab, cfg.rank_table);

    auto& c = r.payload.config;
    r.payload.codec = CodecId::epc;
    c.p_mask = cfg.pm.p_mask.reduced();
    c.window = cfg.pm.window;
    c.max_run = cfg.pm.max_run;
    c.k = cfg.k;
    c.mode = cfg.mode;
    c.beta = cfg.beta.reduced();
    c.vocab_size = vocab;
    c.token_count = tokens.size();
    c.char_count = char_count;
    c.aux_order = cfg.pm.aux_order;
    r.payload.positions = std::move(pk.positions);
    r.payload.kept = std::move(pk.kept);
    r.payload.flags = std::move(coded.flags);
    r.payload.ranks = std::move(coded.ranks);
    r.payload.fallback = std::move(coded.fallback);
    detail::fill_ledger(r, pk);
    r.ledger.fallback_ideal_bits = coded.fallback_ideal_bits;
    return r;
}

// Single-shot decode: one predict call with all of M masked, top-1 everywhere, then the stored
// overrides. Refinement may only touch SKIP positions; every other masked position is certified.
inline EPCDecodeResult epc_decompress(const Payload& p, const Predictor& predictor, const DecodeOptions& opt = {}) {
    if (p.codec != CodecId::epc) throw FormatError("payload is not an EPC payload");
    detail::check_vocab(p, predictor);
    const auto& c = p.config;
    if (c.k < 2 || c.k > 0xFFFFFFFFull) throw IntegrityError("rank threshold K out of range in header");
    EPCDecodeResult out;
    auto ctx = detail::decode_positions_and_kept(p, out.mask);
    const auto& m = out.mask.masked;
    const auto k = static_cast<std::uint32_t>(c.k);
    const auto alphabet = RankAlphabet::for_mode(2, k, c.mode);
    out.residual = decode_residual(p, m.size(), alphabet, opt.rank_table);

    out.tokens = ctx;
    if (!m.empty()) {
        const auto dists = predictor.predict(ctx, m, std::max<std::size_t>(k, 64));
        if (dists.size() != m.size()) throw PredictorError("predictor returned the wrong number of distributions");
        std::size_t next_correction = 0;
        std::size_t next_fallback = 0;
        std::vector<bool> locked(ctx.size(), false);
        std::vector<std::size_t> skipped;
        for (std::size_t j = 0; j < m.size(); ++j) {
            const auto& d = dists[j];
            Token t = d.argmax();
            bool certified = true;
            if (out.residual.flags[j]) {
                const auto& corr = out.residual.corrections[next_correction++];
                switch (corr.kind) {
                    case CorrectionKind::rank:
                        if (corr.rank > d.top.size())
                            throw IntegrityError("rank " + std::to_string(corr.rank) + " past the predictor's list at position " +
                                                 std::to_string(m[j]));
                        t = d.top[corr.rank - 1].token;
                        break;
                    case CorrectionKind::fallback:
                        t = out.residual.fallback_tokens[next_fallback++];
                        break;
                    case CorrectionKind::skip:
                        certified = false;
                        skipped.push_back(m[j]);
                        break;
                }
            }
            out.tokens[m[j]] = t;
            locked[m[j]] = certified;
        }
        if (opt.refine.iterations > 0 && !skipped.empty())
            out.tokens = refine(std::move(out.tokens), predictor, opt.refine, skipped, locked);
    }
    out.error_bound = epc_error_bound(out.residual, m.size());
    return out;
}

}  // namespace mlc
