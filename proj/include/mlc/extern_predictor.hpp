#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mlc/error.hpp"
#include "mlc/predictor.hpp"
#include "mlc/protocol.hpp"
#include "mlc/text.hpp"

namespace mlc {

// Sends one NDJSON request line and returns the response line with the same id.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string roundtrip(std::int64_t id, const std::string& line) = 0;
};

// "stdio:<cmd>" spawns <cmd> under /bin/sh; "http://host:port/path" POSTs one request per call.
std::unique_ptr<Transport> make_transport(std::string_view endpoint);

// Predictor backed by a model server. Every answer is validated; the protocol handshake fixes the
// vocabulary and the declared model size.
class ExternPredictor final : public Predictor {
public:
    explicit ExternPredictor(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {
        const auto hello = call({{"op", "hello"}});
        protocol::throw_if_error(hello);
        try {
            if (hello.at("protocol_version").get<int>() != protocol::kProtocolVersion)
                throw ProtocolError("model server speaks an unsupported protocol version");
            if (!hello.at("deterministic").get<bool>()) throw ProtocolError("model server is not deterministic");
            info_.name = hello.value("name", std::string("extern"));
            info_.vocab_size = hello.at("vocab_size").get<std::uint32_t>();
            info_.max_sequence = hello.at("max_sequence").get<std::uint64_t>();
            info_.model_bytes = hello.value("model_bytes", std::uint64_t{0});
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed hello response: ") + e.what());
        }
        if (info_.vocab_size == 0) throw ProtocolError("model server declared an empty vocabulary");
    }

    explicit ExternPredictor(std::string_view endpoint) : ExternPredictor(make_transport(endpoint)) {}

    [[nodiscard]] std::string name() const override { return "extern:" + info_.name; }
    [[nodiscard]] std::uint32_t vocab_size() const override { return info_.vocab_size; }
    [[nodiscard]] std::uint64_t static_bytes() const override { return info_.model_bytes; }
    [[nodiscard]] const protocol::ServerInfo& info() const noexcept { return info_; }

    [[nodiscard]] std::vector<PredictiveDistribution> predict(std::span<const Token> context,
                                                              std::span<const std::size_t> positions,
                                                              std::size_t top_k) const override {
        check_length(context.size());
        const auto resp = call({{"op", "predict"},
                                {"tokens", protocol::encode_context(context)},
                                {"masked", std::vector<std::size_t>(positions.begin(), positions.end())},
                                {"top_k", top_k}});
        return protocol::parse_predict_response(resp, positions, top_k, info_.vocab_size);
    }

    [[nodiscard]] std::vector<double> surprisal(std::span<const Token> tokens) const override {
        check_length(tokens.size());
        const auto resp = call({{"op", "surprisal"}, {"tokens", std::vector<Token>(tokens.begin(), tokens.end())}});
        return protocol::parse_surprisal_response(resp, tokens.size());
    }

    [[nodiscard]] TokenSeq tokenize(std::string_view text) const {
        const auto resp = call({{"op", "tokenize"}, {"text", std::string(text)}});
        protocol::throw_if_error(resp);
        try {
            return resp.at("tokens").get<TokenSeq>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed tokenize response: ") + e.what());
        }
    }

    [[nodiscard]] std::string detokenize(std::span<const Token> tokens) const {
        const auto resp = call({{"op", "detokenize"}, {"tokens", std::vector<Token>(tokens.begin(), tokens.end())}});
        protocol::throw_if_error(resp);
        try {
            return resp.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed detokenize response: ") + e.what());
        }
    }

private:
    void check_length(std::size_t n) const {
        if (n > info_.max_sequence)
            throw PredictorError("sequence of " + std::to_string(n) + " tokens exceeds the server limit of " +
                                 std::to_string(info_.max_sequence));
    }

    nlohmann::json call(nlohmann::json req) const {
        const std::int64_t id = next_id_++;
        req["id"] = id;
        nlohmann::json resp;
        try {
            resp = nlohmann::json::parse(transport_->roundtrip(id, req.dump()));
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("unparseable response: ") + e.what());
        }
        if (!resp.is_object() || !resp.contains("id") || resp["id"] != id)
            throw ProtocolError("response id does not match request id " + std::to_string(id));
        return resp;
    }

    std::unique_ptr<Transport> transport_;
    mutable std::atomic<std::int64_t> next_id_{1};
    protocol::ServerInfo info_;
};

// Tokenizer that delegates to the model server's own tokenizer.
class ServerTokenizer final : public Tokenizer {
public:
    explicit ServerTokenizer(std::shared_ptr<const ExternPredictor> server) : server_(std::move(server)) {}
    [[nodiscard]] std::string name() const override { return "server"; }
    [[nodiscard]] std::uint32_t vocab_size() const override { return server_->vocab_size(); }
    [[nodiscard]] TokenSeq encode(std::string_view text) const override { return server_->tokenize(text); }
    [[nodiscard]] std::string decode(std::span<const Token> tokens) const override {
        return server_->detokenize(tokens);
    }
    [[nodiscard]] std::uint64_t static_bytes() const override { return 0; }

private:
    std::shared_ptr<const ExternPredictor> server_;
};

}  // namespace mlc
