#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mlc/error.hpp"

namespace mlc {

using Token = std::uint32_t;
using TokenSeq = std::vector<Token>;

// Context entry the predictor must treat as absent.
inline constexpr Token kHole = 0xFFFFFFFFu;

struct Candidate {
    Token token = 0;
    double prob = 0.0;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Ranked candidates at one position: probability descending, ties to the lower token id.
struct PredictiveDistribution {
    std::size_t position = 0;
    std::vector<Candidate> top;
    double tail_mass = 0.0;

    // 1-based rank of token, or nullopt when it is not in the list.
    [[nodiscard]] std::optional<std::size_t> rank_of(Token token) const {
        for (std::size_t i = 0; i < top.size(); ++i)
            if (top[i].token == token) return i + 1;
        return std::nullopt;
    }

    [[nodiscard]] Token argmax() const {
        if (top.empty()) throw PredictorError("empty distribution at position " + std::to_string(position));
        return top.front().token;
    }

    [[nodiscard]] double top_prob() const { return top.empty() ? 0.0 : top.front().prob; }

    friend bool operator==(const PredictiveDistribution&, const PredictiveDistribution&) = default;
};

inline bool ranked_before(const Candidate& a, const Candidate& b) {
    return a.prob != b.prob ? a.prob > b.prob : a.token < b.token;
}

// Checks ordering, positivity and normalisation (within 1e-6).
inline void validate_distribution(const PredictiveDistribution& d, std::uint32_t vocab_size) {
    const auto where = " at position " + std::to_string(d.position);
    double sum = d.tail_mass;
    for (std::size_t i = 0; i < d.top.size(); ++i) {
        const auto& c = d.top[i];
        if (!(c.prob > 0.0) || !std::isfinite(c.prob)) throw ProtocolError("non-positive probability" + where);
        if (c.token >= vocab_size) throw ProtocolError("token outside vocabulary" + where);
        if (i > 0 && !ranked_before(d.top[i - 1], c)) throw ProtocolError("candidates out of rank order" + where);
        sum += c.prob;
    }
    if (d.tail_mass < -1e-6 || std::abs(sum - 1.0) > 1e-6)
        throw ProtocolError("probabilities do not sum to 1" + where);
}

// The conditional model boundary. Implementations are immutable after construction and must be
// deterministic: encoder and decoder issue identical queries and rely on identical answers.
class Predictor {
public:
    virtual ~Predictor() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual std::uint32_t vocab_size() const = 0;
    // Serialized size of everything the decoder must already hold (model, tables).
    [[nodiscard]] virtual std::uint64_t static_bytes() const = 0;

    // One distribution per entry of positions, in that order. Conditions on every token of
    // context that is not kHole; the requested positions are treated as holes regardless.
    [[nodiscard]] virtual std::vector<PredictiveDistribution> predict(std::span<const Token> context,
                                                                      std::span<const std::size_t> positions,
                                                                      std::size_t top_k) const = 0;

    // Leave-one-out surprisal in bits: s_i = -log2 q(x_i | x without i).
    [[nodiscard]] virtual std::vector<double> surprisal(std::span<const Token> tokens) const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

// Remembers a digest of every (query, answer) pair and fails hard when an identical query
// gets a different answer.
class DeterminismGuard final : public Predictor {
public:
    explicit DeterminismGuard(PredictorPtr inner) : inner_(std::move(inner)) {}

    [[nodiscard]] std::string name() const override { return inner_->name(); }
    [[nodiscard]] std::uint32_t vocab_size() const override { return inner_->vocab_size(); }
    [[nodiscard]] std::uint64_t static_bytes() const override { return inner_->static_bytes(); }

    [[nodiscard]] std::vector<PredictiveDistribution> predict(std::span<const Token> context,
                                                              std::span<const std::size_t> positions,
                                                              std::size_t top_k) const override {
        auto out = inner_->predict(context, positions, top_k);
        std::string q = "p";
        append(q, context);
        append(q, positions);
        append(q, std::span<const std::size_t>(&top_k, 1));
        std::string a;
        for (const auto& d : out) {
            append(a, std::span<const std::size_t>(&d.position, 1));
            for (const auto& c : d.top) {
                append(a, std::span<const Token>(&c.token, 1));
                append(a, std::span<const double>(&c.prob, 1));
            }
            append(a, std::span<const double>(&d.tail_mass, 1));
        }
        check(q, a);
        return out;
    }

    [[nodiscard]] std::vector<double> surprisal(std::span<const Token> tokens) const override {
        auto out = inner_->surprisal(tokens);
        std::string q = "s";
        append(q, tokens);
        std::string a;
        append(a, std::span<const double>(out));
        check(q, a);
        return out;
    }

private:
    template <typename T>
    static void append(std::string& s, std::span<const T> v) {
        const auto n = v.size();
        s.append(reinterpret_cast<const char*>(&n), sizeof n);
        s.append(reinterpret_cast<const char*>(v.data()), v.size_bytes());
    }

    void check(const std::string& query, const std::string& answer) const {
        const auto qd = std::hash<std::string>{}(query);
        const auto ad = std::hash<std::string>{}(answer);
        std::lock_guard lock(mutex_);
        const auto [it, inserted] = seen_.emplace(qd, ad);
        if (!inserted && it->second != ad)
            throw ProtocolError("predictor " + inner_->name() + " answered an identical query differently");
    }

    PredictorPtr inner_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::size_t, std::size_t> seen_;
};

}  // namespace mlc
