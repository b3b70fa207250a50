// Reference server for the predictor wire protocol, backed by the built-in model and the byte
// tokenizer, or replaying canned responses from a golden fixture file.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "mlc/builtin_model.hpp"
#include "mlc/protocol.hpp"
#include "mlc/text.hpp"

namespace {

using nlohmann::json;

// Golden file: one {"request": {...}, "response": {...}} object per line. Requests are matched
// with their id removed; the response is sent back under the caller's id.
class Replay {
public:
    explicit Replay(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open fixture file " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = json::parse(line);
            canned_[key(j.at("request"))] = j.at("response");
        }
    }

    [[nodiscard]] json answer(const json& req) const {
        const auto it = canned_.find(key(req));
        const json id = req.contains("id") ? req["id"] : json(nullptr);
        if (it == canned_.end()) return mlc::protocol::error_response(id, "no_fixture", "request not in fixture file");
        auto resp = it->second;
        resp["id"] = id;
        return resp;
    }

private:
    static std::string key(json req) {
        req.erase("id");
        return req.dump();
    }
    std::map<std::string, json> canned_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictor protocol fixture server"};
    unsigned order = 0;
    std::uint64_t model_bytes = 0;
    std::string replay_path;
    int http_port = -1;
    app.add_option("--order", order, "Built-in model order (0 or 1)")->check(CLI::Range(0, 1));
    app.add_option("--model-bytes", model_bytes, "Model size reported in the handshake");
    app.add_option("--replay", replay_path, "Answer from a golden fixture file instead of the model");
    app.add_option("--http-port", http_port, "Serve POST /v1 on 127.0.0.1 (0 picks a free port) instead of stdio");
    CLI11_PARSE(app, argc, argv);

    const mlc::ByteTokenizer tokenizer;
    const mlc::BuiltinModel model(tokenizer.vocab_size(), order);
    const mlc::protocol::ServerInfo info{model.name(), model.vocab_size(), 1u << 20, model_bytes};
    std::unique_ptr<Replay> replay;
    if (!replay_path.empty()) replay = std::make_unique<Replay>(replay_path);

    auto answer = [&](const std::string& line) -> std::string {
        json req;
        try {
            req = json::parse(line);
        } catch (const json::exception& e) {
            return mlc::protocol::error_response(nullptr, "bad_request", e.what()).dump();
        }
        if (replay) return replay->answer(req).dump();
        return mlc::protocol::handle_request(req, model, &tokenizer, info).dump();
    };

    if (http_port >= 0) {
        httplib::Server server;
        server.Post("/v1", [&](const httplib::Request& req, httplib::Response& res) {
            res.set_content(answer(req.body), "application/json");
        });
        int port = http_port;
        if (port == 0) port = server.bind_to_any_port("127.0.0.1");
        else if (!server.bind_to_port("127.0.0.1", port)) port = -1;
        if (port < 0) {
            std::cerr << "cannot bind port " << http_port << "\n";
            return 1;
        }
        std::cout << "listening " << port << std::endl;
        server.listen_after_bind();
        return 0;
    }

    std::ios::sync_with_stdio(false);
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        std::cout << answer(line) << '\n' << std::flush;
    }
    return 0;
}
