#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "mlc/error.hpp"
#include "mlc/predictor.hpp"

namespace mlc {

struct RefineConfig {
    unsigned iterations = 2;
    // Explicit M_s per iteration; empty means M_s = ceil(|eligible| / 2^s).
    std::vector<std::size_t> schedule;
    std::size_t chunk = 8;

    static RefineConfig disabled() {
        RefineConfig c;
        c.iterations = 0;
        return c;
    }

    [[nodiscard]] std::size_t budget(unsigned s, std::size_t eligible) const {
        if (!schedule.empty()) return s - 1 < schedule.size() ? std::min(schedule[s - 1], eligible) : 0;
        if (s >= 64) return eligible == 0 ? 0 : 1;
        const std::size_t d = std::size_t{1} << s;
        return (eligible + d - 1) / d;
    }
};

// Fills every kHole of `tokens` by repeatedly predicting all remaining holes and fixing the
// `chunk` most confident ones (top-1 probability desc, index asc) to their argmax.
// chunk == 0 fixes every hole in one shot.
inline TokenSeq infill(TokenSeq tokens, const Predictor& predictor, std::size_t chunk = 8) {
    std::vector<std::size_t> holes;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i] == kHole) holes.push_back(i);
    while (!holes.empty()) {
        const auto dists = predictor.predict(tokens, holes, 1);
        if (dists.size() != holes.size()) throw PredictorError("predictor returned the wrong number of distributions");
        std::vector<std::size_t> order(holes.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return dists[a].top_prob() > dists[b].top_prob(); });
        const std::size_t take = chunk == 0 ? holes.size() : std::min(chunk, holes.size());
        std::vector<bool> fixed(holes.size(), false);
        for (std::size_t j = 0; j < take; ++j) {
            tokens[holes[order[j]]] = dists[order[j]].argmax();
            fixed[order[j]] = true;
        }
        std::vector<std::size_t> rest;
        rest.reserve(holes.size() - take);
        for (std::size_t j = 0; j < holes.size(); ++j)
            if (!fixed[j]) rest.push_back(holes[j]);
        holes = std::move(rest);
    }
    return tokens;
}

// Iterative refinement. Each iteration scores every eligible position (in `candidates` and not
// locked) by u_i = 1 - max_v p(v | x, i), with only position i held out, and rewrites the M_s most
// uncertain (u desc, index asc) to their argmax. Updates within an iteration are synchronous.
inline TokenSeq refine(TokenSeq x, const Predictor& predictor, const RefineConfig& cfg,
                       std::span<const std::size_t> candidates, const std::vector<bool>& locked) {
    std::vector<std::size_t> eligible;
    for (const auto i : candidates) {
        if (i >= x.size()) throw ConfigError("refine candidate beyond sequence end");
        if (i < locked.size() && locked[i]) continue;
        eligible.push_back(i);
    }
    for (unsigned s = 1; s <= cfg.iterations && !eligible.empty(); ++s) {
        const std::size_t m = cfg.budget(s, eligible.size());
        if (m == 0) break;
        std::vector<double> u(eligible.size());
        std::vector<Token> best(eligible.size());
        for (std::size_t j = 0; j < eligible.size(); ++j) {
            const std::size_t pos = eligible[j];
            const auto d = predictor.predict(x, std::span<const std::size_t>(&pos, 1), 1);
            if (d.size() != 1) throw PredictorError("predictor returned the wrong number of distributions");
            u[j] = 1.0 - d[0].top_prob();
            best[j] = d[0].argmax();
        }
        std::vector<std::size_t> order(eligible.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
        for (std::size_t j = 0; j < m; ++j) x[eligible[order[j]]] = best[order[j]];
    }
    return x;
}

}  // namespace mlc
