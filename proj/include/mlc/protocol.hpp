#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mlc/error.hpp"
#include "mlc/predictor.hpp"
#include "mlc/text.hpp"

// Newline-delimited JSON predictor protocol. Requests:
//   {"id":N, "op":"hello"}
//   {"id":N, "op":"predict", "tokens":[t|-1...], "masked":[i...], "top_k":K}
//   {"id":N, "op":"surprisal", "tokens":[t...]}
//   {"id":N, "op":"tokenize", "text":"..."} / {"id":N, "op":"detokenize", "tokens":[t...]}
// Responses carry the same id. Probabilities and surprisals travel as decimal strings with 17
// significant digits so they round-trip exactly through IEEE doubles.
namespace mlc::protocol {

using nlohmann::json;

inline constexpr int kProtocolVersion = 1;

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_real(const json& j, const char* what) {
    if (!j.is_string()) throw ProtocolError(std::string(what) + " must be a decimal string");
    const auto& s = j.get_ref<const std::string&>();
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw ProtocolError(std::string("malformed decimal in ") + what + ": '" + s + "'");
    return v;
}

struct ServerInfo {
    std::string name;
    std::uint32_t vocab_size = 0;
    std::uint64_t max_sequence = 1u << 20;
    std::uint64_t model_bytes = 0;
};

inline json error_response(const json& id, std::string_view code, std::string_view message) {
    return {{"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

inline json encode_context(std::span<const Token> context) {
    json out = json::array();
    for (const auto t : context) {
        if (t == kHole) out.push_back(-1);
        else out.push_back(t);
    }
    return out;
}

// Server side: answers one request with `predictor` (and `tokenizer` for the text ops).
inline json handle_request(const json& req, const Predictor& predictor, const Tokenizer* tokenizer,
                           const ServerInfo& info) {
    const json id = req.contains("id") ? req["id"] : json(nullptr);
    try {
        if (!req.is_object() || !req.contains("op") || !req["op"].is_string())
            return error_response(id, "bad_request", "missing op");
        const auto op = req["op"].get<std::string>();
        auto read_tokens = [&](bool allow_holes) {
            TokenSeq t;
            for (const auto& v : req.at("tokens")) {
                const auto x = v.get<std::int64_t>();
                if (x == -1 && allow_holes) t.push_back(kHole);
                else if (x < 0 || x >= static_cast<std::int64_t>(info.vocab_size))
                    throw ConfigError("token " + std::to_string(x) + " outside vocabulary");
                else t.push_back(static_cast<Token>(x));
            }
            if (t.size() > info.max_sequence) throw ConfigError("sequence longer than max_sequence");
            return t;
        };
        if (op == "hello") {
            return {{"id", id},
                    {"protocol_version", kProtocolVersion},
                    {"name", info.name},
                    {"vocab_size", info.vocab_size},
                    {"max_sequence", info.max_sequence},
                    {"model_bytes", info.model_bytes},
                    {"deterministic", true}};
        }
        if (op == "predict") {
            const auto tokens = read_tokens(true);
            std::vector<std::size_t> masked;
            for (const auto& v : req.at("masked")) {
                const auto p = v.get<std::int64_t>();
                if (p < 0 || static_cast<std::uint64_t>(p) >= tokens.size())
                    throw ConfigError("masked position " + std::to_string(p) + " outside sequence");
                masked.push_back(static_cast<std::size_t>(p));
            }
            const auto top_k = req.at("top_k").get<std::int64_t>();
            if (top_k < 1) throw ConfigError("top_k must be at least 1");
            json dists = json::array();
            for (const auto& d : predictor.predict(tokens, masked, static_cast<std::size_t>(top_k))) {
                json top = json::array();
                for (const auto& c : d.top) top.push_back(json::array({c.token, format_real(c.prob)}));
                dists.push_back({{"pos", d.position}, {"top", std::move(top)}, {"tail_mass", format_real(d.tail_mass)}});
            }
            return {{"id", id}, {"dists", std::move(dists)}};
        }
        if (op == "surprisal") {
            json s = json::array();
            for (const auto v : predictor.surprisal(read_tokens(false))) s.push_back(format_real(v));
            return {{"id", id}, {"s", std::move(s)}};
        }
        if (op == "tokenize" || op == "detokenize") {
            if (tokenizer == nullptr) return error_response(id, "unsupported", "server has no tokenizer");
            if (op == "tokenize") return {{"id", id}, {"tokens", tokenizer->encode(req.at("text").get<std::string>())}};
            const auto tokens = read_tokens(false);
            const auto text = tokenizer->decode(tokens);
            if (!valid_utf8(text)) return error_response(id, "bad_request", "detokenized text is not valid UTF-8");
            return {{"id", id}, {"text", text}};
        }
        return error_response(id, "unknown_op", "unknown op '" + op + "'");
    } catch (const json::exception& e) {
        return error_response(id, "bad_request", e.what());
    } catch (const ConfigError& e) {
        return error_response(id, "bad_request", e.what());
    } catch (const Error& e) {
        return error_response(id, "model_error", e.what());
    }
}

inline void throw_if_error(const json& resp) {
    if (resp.contains("error")) {
        const auto& e = resp["error"];
        throw PredictorError("model server error " + e.value("code", std::string("?")) + ": " +
                             e.value("message", std::string("")));
    }
}

// Client side: parses and validates a predict response for the given positions.
inline std::vector<PredictiveDistribution> parse_predict_response(const json& resp,
                                                                  std::span<const std::size_t> positions,
                                                                  std::size_t top_k, std::uint32_t vocab_size) {
    throw_if_error(resp);
    try {
        const auto& dists = resp.at("dists");
        if (dists.size() != positions.size()) throw ProtocolError("predict response has the wrong number of dists");
        std::vector<PredictiveDistribution> out;
        out.reserve(positions.size());
        for (std::size_t j = 0; j < positions.size(); ++j) {
            const auto& d = dists[j];
            PredictiveDistribution pd;
            pd.position = d.at("pos").get<std::size_t>();
            if (pd.position != positions[j]) throw ProtocolError("predict response positions out of order");
            for (const auto& c : d.at("top")) {
                if (!c.is_array() || c.size() != 2) throw ProtocolError("candidate must be [token, prob]");
                pd.top.push_back({c[0].get<Token>(), parse_real(c[1], "prob")});
            }
            if (pd.top.size() > top_k) throw ProtocolError("predict response longer than top_k");
            pd.tail_mass = parse_real(d.at("tail_mass"), "tail_mass");
            validate_distribution(pd, vocab_size);
            out.push_back(std::move(pd));
        }
        return out;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed predict response: ") + e.what());
    }
}

inline std::vector<double> parse_surprisal_response(const json& resp, std::size_t n) {
    throw_if_error(resp);
    try {
        const auto& s = resp.at("s");
        if (s.size() != n) throw ProtocolError("surprisal response has the wrong length");
        std::vector<double> out;
        out.reserve(n);
        for (const auto& v : s) {
            const double x = parse_real(v, "surprisal");
            if (!(x >= 0.0) || !std::isfinite(x)) throw ProtocolError("surprisal must be finite and non-negative");
            out.push_back(x);
        }
        return out;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed surprisal response: ") + e.what());
    }
}

}  // namespace mlc::protocol
