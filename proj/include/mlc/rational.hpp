#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "mlc/error.hpp"

namespace mlc {

// Exact fraction used for p_mask and the fallback budget so that quota arithmetic never touches
// floating point and the container can store both parts as varints.
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    constexpr Rational() = default;
    constexpr Rational(std::uint64_t n, std::uint64_t d) : num(n), den(d) {}

    [[nodiscard]] Rational reduced() const {
        if (den == 0) throw ConfigError("rational with zero denominator");
        const auto g = std::gcd(num, den);
        return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
    }

    // floor(this * n)
    [[nodiscard]] std::uint64_t floor_times(std::uint64_t n) const {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(num) * n) / den);
    }

    [[nodiscard]] double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return static_cast<unsigned __int128>(a.num) * b.den == static_cast<unsigned __int128>(b.num) * a.den;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<unsigned __int128>(a.num) * b.den < static_cast<unsigned __int128>(b.num) * a.den;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }

    // Accepts "0.6", "3/5", "1", ".25". No exponent notation.
    static Rational parse(std::string_view s) {
        if (s.empty()) throw ConfigError("empty fraction");
        if (const auto slash = s.find('/'); slash != std::string_view::npos) {
            const auto n = parse_uint(s.substr(0, slash));
            const auto d = parse_uint(s.substr(slash + 1));
            if (d == 0) throw ConfigError("fraction with zero denominator: " + std::string(s));
            return Rational{n, d}.reduced();
        }
        std::uint64_t n = 0;
        std::uint64_t d = 1;
        bool seen_dot = false;
        bool any_digit = false;
        for (const char c : s) {
            if (c == '.') {
                if (seen_dot) throw ConfigError("malformed fraction: " + std::string(s));
                seen_dot = true;
            } else if (c >= '0' && c <= '9') {
                any_digit = true;
                if (n > 100000000000000ull || d > 100000000000000ull)
                    throw ConfigError("fraction has too many digits: " + std::string(s));
                n = n * 10 + static_cast<std::uint64_t>(c - '0');
                if (seen_dot) d *= 10;
            } else {
                throw ConfigError("malformed fraction: " + std::string(s));
            }
        }
        if (!any_digit) throw ConfigError("malformed fraction: " + std::string(s));
        return Rational{n, d}.reduced();
    }

    [[nodiscard]] std::string str() const {
        return std::to_string(num) + "/" + std::to_string(den);
    }

private:
    static std::uint64_t parse_uint(std::string_view s) {
        if (s.empty()) throw ConfigError("malformed fraction");
        std::uint64_t v = 0;
        for (const char c : s) {
            if (c < '0' || c > '9') throw ConfigError("malformed fraction: " + std::string(s));
            v = v * 10 + static_cast<std::uint64_t>(c - '0');
        }
        return v;
    }
};

}  // namespace mlc
