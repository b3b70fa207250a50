#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "mlc/error.hpp"
#include "mlc/payload.hpp"

namespace mlc {

inline double bpc(const CostLedger& ledger, std::uint64_t char_count) {
    if (char_count == 0) throw ConfigError("bpc needs at least one character");
    return static_cast<double>(ledger.total_bits()) / static_cast<double>(char_count);
}

// Static artefact bits spread over n_copies documents.
inline double amortised_bpc(const CostLedger& ledger, std::uint64_t char_count) {
    if (char_count == 0) throw ConfigError("bpc needs at least one character");
    if (ledger.n_copies == 0) throw ConfigError("n_copies must be at least 1");
    return (static_cast<double>(ledger.total_bits()) +
            static_cast<double>(ledger.static_bits) / static_cast<double>(ledger.n_copies)) /
           static_cast<double>(char_count);
}

// Unit-cost edit distance, two-row DP over the shorter string.
template <typename T>
std::size_t levenshtein(std::span<const T> a, std::span<const T> b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    return levenshtein(std::span<const char32_t>(a.data(), a.size()), std::span<const char32_t>(b.data(), b.size()));
}

// 1 - d(a, b) / max(|a|, |b|, 1), over code points.
inline double char_fidelity(std::u32string_view original, std::u32string_view decoded) {
    const auto d = levenshtein(original, decoded);
    const auto norm = std::max<std::size_t>({original.size(), decoded.size(), 1});
    return 1.0 - static_cast<double>(d) / static_cast<double>(norm);
}

// Character n-gram F-beta (whitespace kept). Precision and recall are averaged over the orders
// 1..n_max for which both sides have n-grams, then combined.
inline double chrf(std::u32string_view original, std::u32string_view decoded, std::size_t n_max = 6,
                   double beta = 2.0) {
    if (original.empty() && decoded.empty()) return 1.0;
    if (original.empty() || decoded.empty()) return 0.0;
    double p_sum = 0.0;
    double r_sum = 0.0;
    std::size_t orders = 0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (original.size() < n || decoded.size() < n) break;
        std::map<std::u32string_view, std::size_t> ref;
        for (std::size_t i = 0; i + n <= original.size(); ++i) ++ref[original.substr(i, n)];
        std::map<std::u32string_view, std::size_t> hyp;
        for (std::size_t i = 0; i + n <= decoded.size(); ++i) ++hyp[decoded.substr(i, n)];
        std::size_t match = 0;
        for (const auto& [g, c] : hyp)
            if (const auto it = ref.find(g); it != ref.end()) match += std::min(c, it->second);
        p_sum += static_cast<double>(match) / static_cast<double>(decoded.size() - n + 1);
        r_sum += static_cast<double>(match) / static_cast<double>(original.size() - n + 1);
        ++orders;
    }
    const double p = p_sum / static_cast<double>(orders);
    const double r = r_sum / static_cast<double>(orders);
    if (p + r == 0.0) return 0.0;
    const double b2 = beta * beta;
    return (1.0 + b2) * p * r / (b2 * p + r);
}

}  // namespace mlc
