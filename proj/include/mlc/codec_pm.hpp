#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlc/container.hpp"
#include "mlc/entropy/adaptive.hpp"
#include "mlc/error.hpp"
#include "mlc/payload.hpp"
#include "mlc/positions.hpp"
#include "mlc/predictor.hpp"
#include "mlc/rational.hpp"
#include "mlc/recon.hpp"

namespace mlc {

struct PMConfig {
    Rational p_mask{0, 1};
    std::size_t window = 64;
    std::size_t max_run = 16;
    unsigned aux_order = 0;

    void validate() const {
        if (p_mask.den == 0 || !(p_mask < Rational{1, 1})) throw ConfigError("p_mask must lie in [0, 1)");
        if (window < 2) throw ConfigError("window must be at least 2");
        if (max_run < 1 || max_run >= window) throw ConfigError("max_run must lie in [1, window)");
        if (aux_order > 1) throw ConfigError("aux coder order must be 0 or 1");
    }
};

// Per window, masks the floor(p_mask * |W|) lowest-surprisal indices (ties to the lower index).
// Then every masked run longer than max_run loses its highest-surprisal member (ties to the lower
// index) until no run is too long; nothing is re-masked.
inline MaskSet select_mask(std::span<const double> s, const PMConfig& cfg) {
    cfg.validate();
    const std::size_t n = s.size();
    std::vector<bool> masked(n, false);
    for (std::size_t lo = 0; lo < n; lo += cfg.window) {
        const std::size_t hi = std::min(n, lo + cfg.window);
        const auto quota = static_cast<std::size_t>(cfg.p_mask.floor_times(hi - lo));
        std::vector<std::size_t> idx(hi - lo);
        std::iota(idx.begin(), idx.end(), lo);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
        for (std::size_t j = 0; j < quota; ++j) masked[idx[j]] = true;
    }

    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = 0; i < n;) {
        if (!masked[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && masked[j]) ++j;
        runs.emplace_back(i, j);
        i = j;
    }
    while (!runs.empty()) {
        const auto [lo, hi] = runs.back();
        runs.pop_back();
        if (hi - lo <= cfg.max_run) continue;
        std::size_t worst = lo;
        for (std::size_t i = lo + 1; i < hi; ++i)
            if (s[i] > s[worst]) worst = i;
        masked[worst] = false;
        if (worst > lo) runs.emplace_back(lo, worst);
        if (worst + 1 < hi) runs.emplace_back(worst + 1, hi);
    }
    return MaskSet::from_bitmap(masked);
}

struct EncodeResult {
    Payload payload;
    CostLedger ledger;
    MaskSet mask;
};

struct DecodeOptions {
    // PM infilling chunk; 0 infills in one shot.
    std::size_t chunk = 8;
    // EPC and patch refinement; iterations == 0 disables it.
    RefineConfig refine = RefineConfig::disabled();
    const FreqTable* rank_table = nullptr;
};

namespace detail {

// Zero-symbol streams are stored as zero bytes instead of a bare rANS flush.
inline Bytes stream_or_empty(CodedStream s) { return s.symbol_count == 0 ? Bytes{} : std::move(s.bytes); }

inline void expect_empty(std::span<const std::uint8_t> b, const char* stream) {
    if (!b.empty()) throw IntegrityError(std::string(stream) + " stream should be empty");
}

// Runs a stream decoder and reports rANS failures as integrity errors naming the stream.
template <typename F>
auto decode_stream(const char* stream, F&& f) {
    try {
        return f();
    } catch (const DecodeError& e) {
        throw IntegrityError(std::string(stream) + " stream: " + e.what());
    } catch (const CodingError& e) {
        throw IntegrityError(std::string(stream) + " stream: " + e.what());
    }
}

inline void check_vocab(const Payload& p, const Predictor& predictor) {
    if (p.config.vocab_size != predictor.vocab_size())
        throw IntegrityError("payload vocabulary " + std::to_string(p.config.vocab_size) + " differs from predictor " +
                             predictor.name() + " vocabulary " + std::to_string(predictor.vocab_size()));
}

inline void check_tokens(std::span<const Token> tokens, std::uint32_t vocab) {
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i] >= vocab)
            throw CodingError("token " + std::to_string(tokens[i]) + " at position " + std::to_string(i) +
                              " outside vocabulary of size " + std::to_string(vocab));
}

struct PositionsAndKept {
    Bytes positions;
    Bytes kept;
    std::uint64_t pos_realized_bits = 0;
    double tok_ideal_bits = 0.0;
};

inline PositionsAndKept encode_positions_and_kept(std::span<const Token> tokens, const MaskSet& mask,
                                                 std::uint32_t vocab, unsigned aux_order) {
    PositionsAndKept out;
    auto pos = encode_min(mask);
    out.pos_realized_bits = pos.code.bit_length;
    out.positions = std::move(pos.code.bytes);
    std::vector<Token> kept;
    kept.reserve(mask.kept_count());
    for (const auto i : mask.kept()) kept.push_back(tokens[i]);
    auto coded = encode_token_stream(kept, vocab, aux_order);
    out.tok_ideal_bits = coded.ideal_bits;
    out.kept = stream_or_empty(std::move(coded.stream));
    return out;
}

// Context with every masked index set to kHole and kept tokens restored.
inline TokenSeq decode_positions_and_kept(const Payload& p, MaskSet& mask) {
    mask = decode_stream("positions", [&] { return decode_min(p.positions); });
    if (mask.n != p.config.token_count) throw IntegrityError("position stream length differs from header token count");
    const auto kept_idx = mask.kept();
    std::vector<Token> kept;
    if (kept_idx.empty()) {
        expect_empty(p.kept, "kept-token");
    } else {
        kept = decode_stream("kept-token", [&] {
            return decode_token_stream(p.kept, kept_idx.size(), p.config.vocab_size, p.config.aux_order,
                                       1, p.config.scale_bits);
        });
    }
    TokenSeq ctx(mask.n, kHole);
    for (std::size_t j = 0; j < kept_idx.size(); ++j) ctx[kept_idx[j]] = kept[j];
    return ctx;
}

inline void fill_ledger(EncodeResult& r, const PositionsAndKept& pk) {
    r.ledger = ledger_of(r.payload);
    r.ledger.pos_realized_bits = pk.pos_realized_bits;
    r.ledger.tok_ideal_bits = pk.tok_ideal_bits;
}

}  // namespace detail

inline EncodeResult pm_compress(std::span<const Token> tokens, std::uint64_t char_count, const Predictor& predictor,
                                const PMConfig& cfg) {
    cfg.validate();
    const auto vocab = predictor.vocab_size();
    detail::check_tokens(tokens, vocab);
    EncodeResult r;
    if (cfg.p_mask.num == 0) {
        r.mask = MaskSet(tokens.size(), {});
    } else {
        const auto s = predictor.surprisal(tokens);
        if (s.size() != tokens.size()) throw PredictorError("surprisal vector length differs from token count");
        r.mask = select_mask(s, cfg);
    }
    auto pk = detail::encode_positions_and_kept(tokens, r.mask, vocab, cfg.aux_order);

    auto& c = r.payload.config;
    r.payload.codec = CodecId::pm;
    c.p_mask = cfg.p_mask.reduced();
    c.window = cfg.window;
    c.max_run = cfg.max_run;
    c.k = 0;
    c.mode = FallbackMode::off;
    c.beta = Rational{0, 1};
    c.vocab_size = vocab;
    c.token_count = tokens.size();
    c.char_count = char_count;
    c.aux_order = cfg.aux_order;
    r.payload.positions = std::move(pk.positions);
    r.payload.kept = std::move(pk.kept);
    detail::fill_ledger(r, pk);
    return r;
}

inline TokenSeq pm_decompress(const Payload& p, const Predictor& predictor, const DecodeOptions& opt = {}) {
    if (p.codec != CodecId::pm) throw FormatError("payload is not a PM payload");
    detail::check_vocab(p, predictor);
    for (const auto* s : {&p.flags, &p.ranks, &p.fallback}) detail::expect_empty(*s, "residual");
    MaskSet mask;
    auto ctx = detail::decode_positions_and_kept(p, mask);
    return infill(std::move(ctx), predictor, opt.chunk);
}

}  // namespace mlc
