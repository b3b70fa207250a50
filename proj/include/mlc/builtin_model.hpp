#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlc/error.hpp"
#include "mlc/predictor.hpp"

namespace mlc {

// Deterministic desk-scale stand-in for a masked LM. Every statistic is gathered from the visible
// tokens of the query itself, so the model carries no trained parameters.
//   order 0: p(v) = (c_v + a) / (C + aV), a Laplace unigram over visible tokens.
//   order 1: 0.5 p_uni(v) + 0.5 (c_{l,v} + a) / (n_l + aV) when the left neighbour l is visible,
//            with bigram counts over pairs whose both members are visible; otherwise p_uni.
class BuiltinModel final : public Predictor {
public:
    BuiltinModel(std::uint32_t vocab_size, unsigned order = 0, double alpha = 1.0)
        : vocab_(vocab_size), order_(order), alpha_(alpha) {
        if (vocab_size == 0) throw ConfigError("builtin model over an empty vocabulary");
        if (order > 1) throw ConfigError("builtin model order must be 0 or 1");
        if (!(alpha > 0.0)) throw ConfigError("builtin model alpha must be positive");
    }

    [[nodiscard]] std::string name() const override { return "builtin:order" + std::to_string(order_); }
    [[nodiscard]] std::uint32_t vocab_size() const override { return vocab_; }
    [[nodiscard]] unsigned order() const noexcept { return order_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }

    // Tables are rebuilt from the visible context at every query; nothing has to ship.
    [[nodiscard]] std::uint64_t static_bytes() const override { return 0; }

    // Size of the count tables a query may populate (unigram, plus dense bigram for order 1).
    [[nodiscard]] std::uint64_t parameter_count() const noexcept {
        const std::uint64_t v = vocab_;
        return order_ == 0 ? v : v + v * v;
    }

    [[nodiscard]] std::vector<PredictiveDistribution> predict(std::span<const Token> context,
                                                              std::span<const std::size_t> positions,
                                                              std::size_t top_k) const override {
        if (top_k == 0) throw ConfigError("top_k must be at least 1");
        const std::size_t n = context.size();
        std::vector<bool> visible(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            if (context[i] == kHole) continue;
            if (context[i] >= vocab_)
                throw PredictorError("token " + std::to_string(context[i]) + " at position " + std::to_string(i) +
                                     " outside vocabulary of size " + std::to_string(vocab_));
            visible[i] = true;
        }
        for (const auto p : positions) {
            if (p >= n) throw PredictorError("requested position " + std::to_string(p) + " beyond context");
            visible[p] = false;
        }

        std::vector<std::uint64_t> uni(vocab_, 0);
        std::uint64_t total = 0;
        std::unordered_map<Token, Successors> bigram;
        std::size_t max_successors = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!visible[i]) continue;
            ++uni[context[i]];
            ++total;
            if (order_ == 1 && i > 0 && visible[i - 1]) {
                auto& s = bigram[context[i - 1]];
                ++s.next[context[i]];
                ++s.n;
                max_successors = std::max(max_successors, s.next.size());
            }
        }
        const auto ranking = unigram_ranking(uni, std::min<std::uint64_t>(vocab_, top_k + max_successors));

        std::vector<PredictiveDistribution> out;
        out.reserve(positions.size());
        std::vector<Candidate> cand;
        for (const auto p : positions) {
            const Successors* succ = nullptr;
            bool has_left = false;
            if (order_ == 1 && p > 0 && visible[p - 1]) {
                has_left = true;
                const auto it = bigram.find(context[p - 1]);
                if (it != bigram.end()) succ = &it->second;
            }
            cand.clear();
            auto add = [&](Token v) {
                std::uint64_t cb = 0;
                std::uint64_t na = 0;
                if (succ != nullptr) {
                    na = succ->n;
                    if (const auto f = succ->next.find(v); f != succ->next.end()) cb = f->second;
                }
                cand.push_back({v, prob(uni[v], total, cb, na, has_left)});
            };
            if (succ != nullptr) {
                for (const auto& [v, c] : succ->next) add(v);
                const std::size_t want = std::min<std::size_t>(ranking.size(), top_k + succ->next.size());
                for (std::size_t j = 0; j < want; ++j)
                    if (!succ->next.contains(ranking[j])) add(ranking[j]);
            } else {
                const std::size_t want = std::min<std::size_t>(ranking.size(), top_k);
                for (std::size_t j = 0; j < want; ++j) add(ranking[j]);
            }
            std::sort(cand.begin(), cand.end(), ranked_before);
            if (cand.size() > top_k) cand.resize(top_k);
            PredictiveDistribution d;
            d.position = p;
            d.top = cand;
            double sum = 0.0;
            for (const auto& c : d.top) sum += c.prob;
            d.tail_mass = std::max(0.0, 1.0 - sum);
            out.push_back(std::move(d));
        }
        return out;
    }

    [[nodiscard]] std::vector<double> surprisal(std::span<const Token> tokens) const override {
        const std::size_t n = tokens.size();
        std::vector<std::uint64_t> uni(vocab_, 0);
        std::map<std::pair<Token, Token>, std::uint64_t> pair_count;
        std::vector<std::uint64_t> left_total(order_ == 1 ? vocab_ : 0, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (tokens[i] >= vocab_)
                throw PredictorError("token " + std::to_string(tokens[i]) + " at position " + std::to_string(i) +
                                     " outside vocabulary of size " + std::to_string(vocab_));
            ++uni[tokens[i]];
            if (order_ == 1 && i > 0) {
                ++pair_count[{tokens[i - 1], tokens[i]}];
                ++left_total[tokens[i - 1]];
            }
        }
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Token x = tokens[i];
            const std::uint64_t cu = uni[x] - 1;
            const std::uint64_t total = n - 1;
            double p = 0.0;
            if (order_ == 1 && i > 0) {
                // drop the pairs (i-1, i) and (i, i+1) that involve the held-out position
                const Token a = tokens[i - 1];
                const bool has_right = i + 1 < n;
                std::uint64_t cb = pair_count[{a, x}] - 1;
                std::uint64_t na = left_total[a] - 1;
                if (has_right && x == a) {
                    --na;
                    if (tokens[i + 1] == x) --cb;
                }
                p = prob(cu, total, cb, na, true);
            } else {
                p = prob(cu, total, 0, 0, false);
            }
            s[i] = std::max(0.0, -std::log2(p));
        }
        return s;
    }

private:
    struct Successors {
        std::map<Token, std::uint64_t> next;
        std::uint64_t n = 0;
    };

    [[nodiscard]] double prob(std::uint64_t cu, std::uint64_t total, std::uint64_t cb, std::uint64_t na,
                              bool has_left) const {
        const double v = static_cast<double>(vocab_);
        const double p_uni = (static_cast<double>(cu) + alpha_) / (static_cast<double>(total) + alpha_ * v);
        if (order_ == 0 || !has_left) return p_uni;
        const double p_bi = (static_cast<double>(cb) + alpha_) / (static_cast<double>(na) + alpha_ * v);
        return 0.5 * p_uni + 0.5 * p_bi;
    }

    // First `want` token ids by (count desc, id asc).
    [[nodiscard]] std::vector<Token> unigram_ranking(const std::vector<std::uint64_t>& uni, std::uint64_t want) const {
        std::vector<Token> seen;
        for (Token v = 0; v < vocab_; ++v)
            if (uni[v] > 0) seen.push_back(v);
        std::stable_sort(seen.begin(), seen.end(), [&](Token a, Token b) { return uni[a] > uni[b]; });
        if (seen.size() >= want) {
            seen.resize(want);
            return seen;
        }
        for (Token v = 0; v < vocab_ && seen.size() < want; ++v)
            if (uni[v] == 0) seen.push_back(v);
        return seen;
    }

    std::uint32_t vocab_;
    unsigned order_;
    double alpha_;
};

}  // namespace mlc
