#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlc/error.hpp"

namespace mlc {

inline constexpr unsigned kScaleBits = 12;

// Normalized integer frequencies summing to exactly 2^scale_bits, every symbol >= 1.
class FreqTable {
public:
    FreqTable() = default;

    FreqTable(std::vector<std::uint32_t> freqs, unsigned scale_bits)
        : freqs_(std::move(freqs)), cumulative_(freqs_.size() + 1, 0), scale_bits_(scale_bits) {
        if (freqs_.empty()) throw CodingError("frequency table with empty alphabet");
        for (std::size_t i = 0; i < freqs_.size(); ++i) {
            if (freqs_[i] == 0) throw CodingError("zero frequency at symbol " + std::to_string(i));
            cumulative_[i + 1] = cumulative_[i] + freqs_[i];
        }
        if (cumulative_.back() != (1u << scale_bits_))
            throw CodingError("frequencies do not sum to 2^scale_bits");
    }

    [[nodiscard]] std::size_t size() const noexcept { return freqs_.size(); }
    [[nodiscard]] unsigned scale_bits() const noexcept { return scale_bits_; }
    [[nodiscard]] std::uint32_t total() const noexcept { return 1u << scale_bits_; }
    [[nodiscard]] std::uint32_t freq(std::size_t s) const { return freqs_.at(s); }
    [[nodiscard]] std::uint32_t start(std::size_t s) const { return cumulative_.at(s); }
    [[nodiscard]] const std::vector<std::uint32_t>& freqs() const noexcept { return freqs_; }
    [[nodiscard]] const std::vector<std::uint32_t>& cumulative() const noexcept { return cumulative_; }

    // Symbol whose interval [start, start+freq) contains slot.
    [[nodiscard]] std::size_t find(std::uint32_t slot) const {
        const auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), slot);
        return static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    }

    friend bool operator==(const FreqTable&, const FreqTable&) = default;

private:
    std::vector<std::uint32_t> freqs_;
    std::vector<std::uint32_t> cumulative_;
    unsigned scale_bits_ = kScaleBits;
};

namespace detail {

// Raises zero entries to 1, taking the units from the currently largest entries
// (ties to the lower index). Sum is preserved.
inline void apply_unit_floor(std::vector<std::uint32_t>& f) {
    std::size_t deficit = 0;
    for (auto& v : f) {
        if (v == 0) {
            v = 1;
            ++deficit;
        }
    }
    if (deficit == 0) return;
    using Entry = std::pair<std::uint32_t, std::size_t>;
    auto cmp = [](const Entry& a, const Entry& b) {
        return a.first != b.first ? a.first < b.first : a.second > b.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] > 1) heap.emplace(f[i], i);
    while (deficit-- > 0) {
        auto [v, i] = heap.top();
        heap.pop();
        f[i] = v - 1;
        if (f[i] > 1) heap.emplace(f[i], i);
    }
}

}  // namespace detail

// Largest-remainder apportionment of 2^scale_bits over raw counts, ties to the lower index,
// followed by a unit floor so every symbol stays codable. All-zero input is treated as uniform.
inline FreqTable normalize_freqs(std::span<const std::uint64_t> raw, unsigned scale_bits = kScaleBits) {
    if (raw.empty()) throw CodingError("normalize_freqs: empty alphabet");
    if (scale_bits > 23) throw CodingError("normalize_freqs: scale_bits above 23");
    const std::uint64_t target = 1ull << scale_bits;
    if (raw.size() > target)
        throw TableOverflowError("alphabet of " + std::to_string(raw.size()) + " symbols exceeds 2^" +
                                 std::to_string(scale_bits));

    unsigned __int128 total = 0;
    for (auto r : raw) total += r;
    std::vector<std::uint64_t> uniform;
    if (total == 0) {
        uniform.assign(raw.size(), 1);
        raw = uniform;
        total = raw.size();
    }

    std::vector<std::uint32_t> f(raw.size());
    std::vector<std::uint64_t> rem(raw.size());
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const unsigned __int128 scaled = static_cast<unsigned __int128>(raw[i]) * target;
        f[i] = static_cast<std::uint32_t>(scaled / total);
        rem[i] = static_cast<std::uint64_t>(scaled % total);
        assigned += f[i];
    }
    std::uint64_t leftover = target - assigned;
    if (leftover > 0) {
        std::vector<std::size_t> order(raw.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
        for (std::size_t j = 0; j < leftover; ++j) ++f[order[j]];
    }
    detail::apply_unit_floor(f);
    return FreqTable(std::move(f), scale_bits);
}

inline FreqTable normalize_freqs(std::initializer_list<std::uint64_t> raw, unsigned scale_bits = kScaleBits) {
    return normalize_freqs(std::span<const std::uint64_t>(raw.begin(), raw.size()), scale_bits);
}

// Two-symbol special case of normalize_freqs, without allocation. Returns the frequency of
// symbol 0; symbol 1 gets the complement. Inputs must not both be zero.
inline std::uint32_t normalize_binary(std::uint64_t a, std::uint64_t b, unsigned scale_bits = kScaleBits) {
    const std::uint64_t target = 1ull << scale_bits;
    const unsigned __int128 total = static_cast<unsigned __int128>(a) + b;
    if (total == 0) return static_cast<std::uint32_t>(target / 2);
    const unsigned __int128 sa = static_cast<unsigned __int128>(a) * target;
    const unsigned __int128 sb = static_cast<unsigned __int128>(b) * target;
    auto fa = static_cast<std::uint64_t>(sa / total);
    auto fb = static_cast<std::uint64_t>(sb / total);
    if (fa + fb < target) {
        // exactly one unit left over; larger remainder wins, tie to symbol 0
        if (sa % total >= sb % total) ++fa;
        else ++fb;
    }
    if (fa == 0) {
        fa = 1;
        --fb;
    } else if (fb == 0) {
        fb = 1;
        --fa;
    }
    return static_cast<std::uint32_t>(fa);
}

}  // namespace mlc
