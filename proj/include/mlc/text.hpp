#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mlc/error.hpp"
#include "mlc/predictor.hpp"

namespace mlc {

namespace detail {

// Length of the well-formed UTF-8 sequence starting at s[i], or 0.
inline std::size_t utf8_sequence(std::string_view s, std::size_t i, char32_t& cp) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    }
    std::size_t len = 0;
    char32_t v = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        v = b0 & 0x1F;
        min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        v = b0 & 0x0F;
        min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        v = b0 & 0x07;
        min = 0x10000;
    } else {
        return 0;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const int c = cont(k);
        if (c < 0) return 0;
        v = (v << 6) | static_cast<char32_t>(c);
    }
    if (v < min || v > 0x10FFFF || (v >= 0xD800 && v <= 0xDFFF)) return 0;
    cp = v;
    return len;
}

}  // namespace detail

inline bool valid_utf8(std::string_view s) {
    char32_t cp = 0;
    for (std::size_t i = 0; i < s.size();) {
        const auto n = detail::utf8_sequence(s, i, cp);
        if (n == 0) return false;
        i += n;
    }
    return true;
}

// Code points of s; each byte of an ill-formed sequence maps to U+DC00 + byte, so distinct
// garbage stays distinct for edit-distance purposes.
inline std::u32string decode_utf8_lossy(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    char32_t cp = 0;
    for (std::size_t i = 0; i < s.size();) {
        const auto n = detail::utf8_sequence(s, i, cp);
        if (n == 0) {
            out.push_back(0xDC00 + static_cast<unsigned char>(s[i]));
            ++i;
        } else {
            out.push_back(cp);
            i += n;
        }
    }
    return out;
}

inline std::uint64_t char_count(std::string_view s) { return decode_utf8_lossy(s).size(); }

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual std::uint32_t vocab_size() const = 0;
    [[nodiscard]] virtual TokenSeq encode(std::string_view text) const = 0;
    [[nodiscard]] virtual std::string decode(std::span<const Token> tokens) const = 0;
    // Bytes the decoder needs beyond the payload (vocabulary sidecar).
    [[nodiscard]] virtual std::uint64_t static_bytes() const = 0;
};

class ByteTokenizer final : public Tokenizer {
public:
    [[nodiscard]] std::string name() const override { return "byte"; }
    [[nodiscard]] std::uint32_t vocab_size() const override { return 256; }
    [[nodiscard]] TokenSeq encode(std::string_view text) const override {
        TokenSeq out;
        out.reserve(text.size());
        for (const char c : text) out.push_back(static_cast<unsigned char>(c));
        return out;
    }
    [[nodiscard]] std::string decode(std::span<const Token> tokens) const override {
        std::string out;
        out.reserve(tokens.size());
        for (const auto t : tokens) {
            if (t > 0xFF) throw CodingError("byte token " + std::to_string(t) + " out of range");
            out.push_back(static_cast<char>(t));
        }
        return out;
    }
    [[nodiscard]] std::uint64_t static_bytes() const override { return 0; }
};

// Splits text into runs of word bytes (ASCII alphanumerics and every byte >= 0x80), runs of
// whitespace, and single punctuation bytes. Concatenating the pieces gives the text back.
inline std::vector<std::string_view> split_words(std::string_view text) {
    auto cls = [](unsigned char c) {
        if (c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return 0;
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return 1;
        return 2;
    };
    std::vector<std::string_view> out;
    for (std::size_t i = 0; i < text.size();) {
        const int k = cls(static_cast<unsigned char>(text[i]));
        std::size_t j = i + 1;
        if (k != 2)
            while (j < text.size() && cls(static_cast<unsigned char>(text[j])) == k) ++j;
        out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

// Vocabulary = sorted unique pieces of the text it was built from.
class WordTokenizer final : public Tokenizer {
public:
    explicit WordTokenizer(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {
        if (vocab_.empty()) vocab_.emplace_back();
        for (std::size_t i = 0; i < vocab_.size(); ++i) {
            if (!index_.emplace(vocab_[i], static_cast<Token>(i)).second)
                throw ConfigError("duplicate word in vocabulary: '" + vocab_[i] + "'");
        }
    }

    static WordTokenizer build(std::string_view corpus) {
        std::vector<std::string> words;
        for (const auto w : split_words(corpus)) words.emplace_back(w);
        std::sort(words.begin(), words.end());
        words.erase(std::unique(words.begin(), words.end()), words.end());
        return WordTokenizer(std::move(words));
    }

    [[nodiscard]] std::string name() const override { return "word"; }
    [[nodiscard]] std::uint32_t vocab_size() const override { return static_cast<std::uint32_t>(vocab_.size()); }
    [[nodiscard]] const std::vector<std::string>& vocab() const noexcept { return vocab_; }

    [[nodiscard]] TokenSeq encode(std::string_view text) const override {
        TokenSeq out;
        for (const auto w : split_words(text)) {
            const auto it = index_.find(std::string(w));
            if (it == index_.end()) throw CodingError("word '" + std::string(w) + "' not in vocabulary");
            out.push_back(it->second);
        }
        return out;
    }

    [[nodiscard]] std::string decode(std::span<const Token> tokens) const override {
        std::string out;
        for (const auto t : tokens) {
            if (t >= vocab_.size()) throw CodingError("word token " + std::to_string(t) + " out of range");
            out += vocab_[t];
        }
        return out;
    }

    [[nodiscard]] std::uint64_t static_bytes() const override { return to_json().dump().size(); }

    [[nodiscard]] nlohmann::json to_json() const {
        // byte strings may be invalid UTF-8 on their own, so words travel as byte arrays
        nlohmann::json words = nlohmann::json::array();
        for (const auto& w : vocab_) {
            nlohmann::json b = nlohmann::json::array();
            for (const char c : w) b.push_back(static_cast<unsigned char>(c));
            words.push_back(std::move(b));
        }
        return {{"tokenizer", "word"}, {"vocab", std::move(words)}};
    }

    static WordTokenizer from_json(const nlohmann::json& j) {
        if (j.value("tokenizer", "") != "word") throw ConfigError("sidecar is not a word tokenizer");
        std::vector<std::string> vocab;
        for (const auto& b : j.at("vocab")) {
            std::string w;
            for (const auto& c : b) w.push_back(static_cast<char>(c.get<int>()));
            vocab.push_back(std::move(w));
        }
        return WordTokenizer(std::move(vocab));
    }

private:
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, Token> index_;
};

}  // namespace mlc
