#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlc/entropy/freq_table.hpp"
#include "mlc/entropy/rans.hpp"
#include "mlc/error.hpp"

namespace mlc {

// Binary indexed tree over non-negative counts.
class Fenwick {
public:
    explicit Fenwick(std::size_t n = 0) : tree_(n + 1, 0) {}

    void add(std::size_t i, std::uint64_t delta) {
        for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
    }

    // Sum over [0, i).
    [[nodiscard]] std::uint64_t prefix(std::size_t i) const {
        std::uint64_t s = 0;
        for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

    [[nodiscard]] std::uint64_t range(std::size_t lo, std::size_t hi) const { return prefix(hi) - prefix(lo); }

private:
    std::vector<std::uint64_t> tree_;
};

// Online unigram with Laplace smoothing: P(s) = (c_s + alpha) / (C + alpha * V).
class AdaptiveCounts {
public:
    AdaptiveCounts(std::uint32_t vocab_size, std::uint32_t alpha = 1)
        : counts_(vocab_size), vocab_(vocab_size), alpha_(alpha) {
        if (vocab_size == 0) throw CodingError("adaptive counts over an empty vocabulary");
        if (alpha == 0) throw CodingError("Laplace alpha must be positive");
    }

    [[nodiscard]] std::uint32_t vocab_size() const noexcept { return vocab_; }
    [[nodiscard]] std::uint32_t alpha() const noexcept { return alpha_; }
    [[nodiscard]] std::uint64_t count_total() const noexcept { return total_; }
    [[nodiscard]] std::uint64_t count(std::uint32_t s) const { return counts_.range(s, s + 1); }

    // Smoothed mass of symbols in [lo, hi).
    [[nodiscard]] std::uint64_t mass(std::uint32_t lo, std::uint32_t hi) const {
        return counts_.range(lo, hi) + static_cast<std::uint64_t>(alpha_) * (hi - lo);
    }
    [[nodiscard]] std::uint64_t total() const noexcept {
        return total_ + static_cast<std::uint64_t>(alpha_) * vocab_;
    }

    void increment(std::uint32_t s) {
        counts_.add(s, 1);
        ++total_;
    }

private:
    Fenwick counts_;
    std::uint32_t vocab_;
    std::uint32_t alpha_;
    std::uint64_t total_ = 0;
};

// Order-1 extension of AdaptiveCounts: Witten-Bell interpolation of the successor counts of the
// previous symbol with the Laplace unigram,
//   P(v | a) = (c_av + d_a * P_uni(v)) / (n_a + d_a),
// where d_a is the number of distinct successors seen after a. With no history (or d_a = 0)
// it is the unigram. Masses are kept integral by scaling with the unigram total U.
class BigramCounts {
public:
    BigramCounts(std::uint32_t vocab_size, std::uint32_t alpha = 1) : unigram_(vocab_size, alpha) {}

    [[nodiscard]] std::uint32_t vocab_size() const noexcept { return unigram_.vocab_size(); }

    void set_context(std::optional<std::uint32_t> previous) {
        ctx_ = nullptr;
        if (previous) {
            const auto it = successors_.find(*previous);
            if (it != successors_.end()) ctx_ = &it->second;
        }
    }

    [[nodiscard]] std::uint64_t mass(std::uint32_t lo, std::uint32_t hi) const {
        if (ctx_ == nullptr) return unigram_.mass(lo, hi);
        std::uint64_t bi = 0;
        for (auto it = ctx_->next.lower_bound(lo); it != ctx_->next.end() && it->first < hi; ++it) bi += it->second;
        return bi * unigram_.total() + ctx_->next.size() * unigram_.mass(lo, hi);
    }

    [[nodiscard]] std::uint64_t total() const {
        if (ctx_ == nullptr) return unigram_.total();
        return (ctx_->n + ctx_->next.size()) * unigram_.total();
    }

    void update(std::optional<std::uint32_t> previous, std::uint32_t s) {
        unigram_.increment(s);
        if (previous) {
            auto& c = successors_[*previous];
            ++c.next[s];
            ++c.n;
        }
    }

private:
    struct Context {
        std::map<std::uint32_t, std::uint64_t> next;
        std::uint64_t n = 0;
    };
    AdaptiveCounts unigram_;
    std::unordered_map<std::uint32_t, Context> successors_;
    const Context* ctx_ = nullptr;
};

namespace detail {

// Codes s by descending a balanced binary partition of [0, V): at each node the binary alphabet
// is {the half containing s, the other half} with the model's smoothed masses. The product of the
// step probabilities is mass(s)/total, i.e. the model probability of s.
template <typename Model>
void encode_by_halving(RansEncoder& enc, const Model& model, std::uint32_t s, unsigned scale_bits) {
    std::uint32_t lo = 0;
    std::uint32_t hi = model.vocab_size();
    const std::uint32_t total = 1u << scale_bits;
    while (hi - lo > 1) {
        const std::uint32_t mid = lo + (hi - lo) / 2;
        const std::uint32_t f_left = normalize_binary(model.mass(lo, mid), model.mass(mid, hi), scale_bits);
        if (s < mid) {
            enc.push(0, f_left);
            hi = mid;
        } else {
            enc.push(f_left, total - f_left);
            lo = mid;
        }
    }
}

template <typename Model>
std::uint32_t decode_by_halving(RansDecoder& dec, const Model& model, unsigned scale_bits) {
    std::uint32_t lo = 0;
    std::uint32_t hi = model.vocab_size();
    const std::uint32_t total = 1u << scale_bits;
    while (hi - lo > 1) {
        const std::uint32_t mid = lo + (hi - lo) / 2;
        const std::uint32_t f_left = normalize_binary(model.mass(lo, mid), model.mass(mid, hi), scale_bits);
        if (dec.peek() < f_left) {
            dec.advance(0, f_left);
            hi = mid;
        } else {
            dec.advance(f_left, total - f_left);
            lo = mid;
        }
    }
    return lo;
}

template <typename Model>
double step_ideal_bits(const Model& model, std::uint32_t s) {
    return -std::log2(static_cast<long double>(model.mass(s, s + 1)) / static_cast<long double>(model.total()));
}

}  // namespace detail

// Practical code plus the ideal adaptive-arithmetic bound for a vocabulary-sized stream.
struct TokenCoded {
    CodedStream stream;
    double ideal_bits = 0.0;
};

// Adaptive coder for token streams over a vocabulary of size V. order 0 is the Laplace unigram,
// order 1 conditions on the previous symbol of the same stream (BigramCounts).
inline TokenCoded encode_token_stream(std::span<const std::uint32_t> tokens, std::uint32_t vocab_size,
                                      unsigned order = 0, std::uint32_t alpha = 1,
                                      unsigned scale_bits = kScaleBits) {
    if (order > 1) throw ConfigError("token coder order must be 0 or 1");
    RansEncoder enc(scale_bits);
    long double ideal = 0.0L;
    auto check = [&](std::uint32_t t) {
        if (t >= vocab_size)
            throw CodingError("token " + std::to_string(t) + " outside vocabulary of size " +
                              std::to_string(vocab_size));
    };
    if (order == 0) {
        AdaptiveCounts model(vocab_size, alpha);
        for (const auto t : tokens) {
            check(t);
            ideal += detail::step_ideal_bits(model, t);
            detail::encode_by_halving(enc, model, t, scale_bits);
            model.increment(t);
        }
    } else {
        BigramCounts model(vocab_size, alpha);
        std::optional<std::uint32_t> prev;
        for (const auto t : tokens) {
            check(t);
            model.set_context(prev);
            ideal += detail::step_ideal_bits(model, t);
            detail::encode_by_halving(enc, model, t, scale_bits);
            model.update(prev, t);
            prev = t;
        }
    }
    return TokenCoded{CodedStream{enc.finish(), tokens.size()}, static_cast<double>(ideal)};
}

inline std::vector<std::uint32_t> decode_token_stream(std::span<const std::uint8_t> bytes, std::size_t n,
                                                      std::uint32_t vocab_size, unsigned order = 0,
                                                      std::uint32_t alpha = 1, unsigned scale_bits = kScaleBits) {
    if (order > 1) throw ConfigError("token coder order must be 0 or 1");
    RansDecoder dec(bytes, scale_bits);
    std::vector<std::uint32_t> out;
    out.reserve(n);
    if (order == 0) {
        AdaptiveCounts model(vocab_size, alpha);
        for (std::size_t i = 0; i < n; ++i) {
            const auto t = detail::decode_by_halving(dec, model, scale_bits);
            model.increment(t);
            out.push_back(t);
        }
    } else {
        BigramCounts model(vocab_size, alpha);
        std::optional<std::uint32_t> prev;
        for (std::size_t i = 0; i < n; ++i) {
            model.set_context(prev);
            const auto t = detail::decode_by_halving(dec, model, scale_bits);
            model.update(prev, t);
            prev = t;
            out.push_back(t);
        }
    }
    dec.expect_exhausted();
    return out;
}

// Vocabulary-sized adaptive unigram coder (the fallback-token coder) with its ideal bound
// sum_t -log2((c_{x_t} + alpha) / (C + alpha V)).
inline TokenCoded adaptive_vway_encode(std::span<const std::uint32_t> symbols, std::uint32_t vocab_size,
                                       std::uint32_t alpha = 1) {
    return encode_token_stream(symbols, vocab_size, 0, alpha);
}

inline std::vector<std::uint32_t> adaptive_vway_decode(std::span<const std::uint8_t> bytes, std::size_t n,
                                                       std::uint32_t vocab_size, std::uint32_t alpha = 1) {
    return decode_token_stream(bytes, n, vocab_size, 0, alpha);
}

// Adaptive Bernoulli coder; counts start at (1, 1) and the table is rebuilt before each bit.
inline CodedStream adaptive_bernoulli_encode(std::span<const std::uint8_t> bits, unsigned scale_bits = kScaleBits) {
    RansEncoder enc(scale_bits);
    std::uint64_t c0 = 1;
    std::uint64_t c1 = 1;
    const std::uint32_t total = 1u << scale_bits;
    for (const auto b : bits) {
        const std::uint32_t f0 = normalize_binary(c0, c1, scale_bits);
        if (b) {
            enc.push(f0, total - f0);
            ++c1;
        } else {
            enc.push(0, f0);
            ++c0;
        }
    }
    return CodedStream{enc.finish(), bits.size()};
}

inline CodedStream adaptive_bernoulli_encode(const std::vector<std::uint8_t>& bits) {
    return adaptive_bernoulli_encode(std::span<const std::uint8_t>(bits));
}

inline std::vector<std::uint8_t> adaptive_bernoulli_decode(std::span<const std::uint8_t> bytes, std::size_t n,
                                                           unsigned scale_bits = kScaleBits) {
    RansDecoder dec(bytes, scale_bits);
    std::vector<std::uint8_t> out;
    out.reserve(n);
    std::uint64_t c0 = 1;
    std::uint64_t c1 = 1;
    const std::uint32_t total = 1u << scale_bits;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t f0 = normalize_binary(c0, c1, scale_bits);
        if (dec.peek() < f0) {
            dec.advance(0, f0);
            ++c0;
            out.push_back(0);
        } else {
            dec.advance(f0, total - f0);
            ++c1;
            out.push_back(1);
        }
    }
    dec.expect_exhausted();
    return out;
}

// Small-alphabet adaptive coder with Laplace-1 counts, the table rebuilt before each symbol.
// Passing `fixed` replaces the adaptive model by a static table (e.g. a rank PMF fitted offline).
inline CodedStream adaptive_symbol_encode(std::span<const std::uint32_t> symbols, std::size_t alphabet,
                                          const FreqTable* fixed = nullptr, unsigned scale_bits = kScaleBits) {
    if (alphabet == 0) throw CodingError("adaptive coder over an empty alphabet");
    if (fixed != nullptr && fixed->size() != alphabet) throw CodingError("static table does not match alphabet");
    RansEncoder enc(scale_bits);
    std::vector<std::uint64_t> counts(alphabet, 1);
    for (const auto s : symbols) {
        if (s >= alphabet)
            throw CodingError("symbol " + std::to_string(s) + " outside alphabet of size " + std::to_string(alphabet));
        if (fixed != nullptr) {
            enc.push(*fixed, s);
        } else {
            const auto table = normalize_freqs(counts, scale_bits);
            enc.push(table, s);
            ++counts[s];
        }
    }
    return CodedStream{enc.finish(), symbols.size()};
}

inline std::vector<std::uint32_t> adaptive_symbol_decode(std::span<const std::uint8_t> bytes, std::size_t n,
                                                         std::size_t alphabet, const FreqTable* fixed = nullptr,
                                                         unsigned scale_bits = kScaleBits) {
    if (alphabet == 0) throw CodingError("adaptive coder over an empty alphabet");
    RansDecoder dec(bytes, scale_bits);
    std::vector<std::uint32_t> out;
    out.reserve(n);
    std::vector<std::uint64_t> counts(alphabet, 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (fixed != nullptr) {
            out.push_back(static_cast<std::uint32_t>(dec.decode(*fixed)));
        } else {
            const auto table = normalize_freqs(counts, scale_bits);
            const auto s = dec.decode(table);
            ++counts[s];
            out.push_back(static_cast<std::uint32_t>(s));
        }
    }
    dec.expect_exhausted();
    return out;
}

// Rank symbols r in {2..K}, coded as r-2 over an alphabet of K-1.
inline CodedStream adaptive_kway_encode(std::span<const std::uint32_t> ranks, std::uint32_t k,
                                        const FreqTable* fixed = nullptr) {
    if (k < 2) throw ConfigError("rank threshold K must be at least 2");
    std::vector<std::uint32_t> shifted;
    shifted.reserve(ranks.size());
    for (const auto r : ranks) {
        if (r < 2 || r > k)
            throw CodingError("rank " + std::to_string(r) + " outside {2.." + std::to_string(k) + "}");
        shifted.push_back(r - 2);
    }
    return adaptive_symbol_encode(shifted, k - 1, fixed);
}

inline std::vector<std::uint32_t> adaptive_kway_decode(std::span<const std::uint8_t> bytes, std::size_t n,
                                                       std::uint32_t k, const FreqTable* fixed = nullptr) {
    if (k < 2) throw ConfigError("rank threshold K must be at least 2");
    auto out = adaptive_symbol_decode(bytes, n, k - 1, fixed);
    for (auto& r : out) r += 2;
    return out;
}

}  // namespace mlc
