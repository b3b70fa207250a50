#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "mlc/builtin_model.hpp"
#include "mlc/codec_epc.hpp"
#include "mlc/extern_predictor.hpp"
#include "mlc/protocol.hpp"
#include "mlc/text.hpp"
#include "support/predictors.hpp"

namespace {

using namespace mlc;
using nlohmann::json;

const std::string kFixtures = std::string(MLC_FIXTURE_DIR) + "/protocol/";
const std::string kServer = MLC_FIXTURE_SERVER;

std::vector<json> load_fixture(const std::string& name) {
    std::ifstream in(kFixtures + name + ".jsonl");
    std::vector<json> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

struct Reference {
    ByteTokenizer tok;
    BuiltinModel model{256, 0};
    protocol::ServerInfo info{"builtin:order0", 256, 1u << 20, 0};
    json answer(const json& req) const { return protocol::handle_request(req, model, &tok, info); }
};

TEST(GoldenFixtures, ReferenceServerReproducesEveryResponse) {
    const Reference ref;
    std::size_t n = 0;
    for (const char* name : {"hello", "predict", "surprisal", "error", "tokenize"}) {
        for (const auto& f : load_fixture(name)) {
            EXPECT_EQ(ref.answer(f.at("request")), f.at("response")) << name << ": " << f.at("request").dump();
            ++n;
        }
    }
    EXPECT_GE(n, 14u);
}

TEST(GoldenFixtures, RepeatedRequestsAreByteIdentical) {
    const Reference ref;
    for (const auto& f : load_fixture("predict"))
        EXPECT_EQ(ref.answer(f.at("request")).dump(), ref.answer(f.at("request")).dump());
}

TEST(GoldenFixtures, PredictResponsesParseAndNormalise) {
    for (const auto& f : load_fixture("predict")) {
        const auto& req = f.at("request");
        const auto masked = req.at("masked").get<std::vector<std::size_t>>();
        const auto dists = protocol::parse_predict_response(f.at("response"), masked, req.at("top_k"), 256);
        for (const auto& d : dists) {
            double sum = d.tail_mass;
            for (const auto& c : d.top) sum += c.prob;
            EXPECT_NEAR(sum, 1.0, 1e-6);
        }
    }
}

TEST(GoldenFixtures, HandCheckedValues) {
    // 't' and ' ' each occur 5 times among the 21 visible bytes: (5+1)/(21+256)
    const auto p = load_fixture("predict").at(0).at("response").at("dists").at(0).at("top").at(0);
    EXPECT_EQ(p.at(0), 32);
    EXPECT_NEAR(protocol::parse_real(p.at(1), "prob"), 6.0 / 277.0, 1e-15);
    // each 'a' of abracadabra sees 4 other a's among 10 tokens: (4+1)/(10+256)
    const auto s = load_fixture("surprisal").at(0).at("response").at("s").at(0);
    EXPECT_NEAR(protocol::parse_real(s, "s"), -std::log2(5.0 / 266.0), 1e-12);
}

TEST(GoldenFixtures, SurprisalMatchesMaskedSelfProbability) {
    const Reference ref;
    const TokenSeq t{97, 98, 114, 97, 99, 97, 100, 97, 98, 114, 97};
    const auto s = protocol::parse_surprisal_response(ref.answer({{"id", 1}, {"op", "surprisal"}, {"tokens", t}}), t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const json req{{"id", 2}, {"op", "predict"}, {"tokens", t}, {"masked", {i}}, {"top_k", 256}};
        const std::vector<std::size_t> pos{i};
        const auto d = protocol::parse_predict_response(ref.answer(req), pos, 256, 256);
        EXPECT_NEAR(s[i], -std::log2(d[0].top[*d[0].rank_of(t[i]) - 1].prob), 1e-6);
    }
}

TEST(ClientParsing, RejectsMalformedResponses) {
    const std::vector<std::size_t> pos{3};
    EXPECT_THROW(protocol::parse_predict_response(json{{"id", 1}, {"dists", json::array()}}, pos, 4, 8), ProtocolError);
    const json bad_real{{"id", 1}, {"dists", {{{"pos", 3}, {"top", {{1, "0.5x"}}}, {"tail_mass", "0.5"}}}}};
    EXPECT_THROW(protocol::parse_predict_response(bad_real, pos, 4, 8), ProtocolError);
    const json numeric{{"id", 1}, {"dists", {{{"pos", 3}, {"top", {{1, 0.5}}}, {"tail_mass", "0.5"}}}}};
    EXPECT_THROW(protocol::parse_predict_response(numeric, pos, 4, 8), ProtocolError);
    const json wrong_pos{{"id", 1}, {"dists", {{{"pos", 2}, {"top", {{1, "0.5"}}}, {"tail_mass", "0.5"}}}}};
    EXPECT_THROW(protocol::parse_predict_response(wrong_pos, pos, 4, 8), ProtocolError);
    const json unnormalised{{"id", 1}, {"dists", {{{"pos", 3}, {"top", {{1, "0.5"}}}, {"tail_mass", "0.4"}}}}};
    EXPECT_THROW(protocol::parse_predict_response(unnormalised, pos, 4, 8), ProtocolError);
    const json too_long{{"id", 1}, {"dists", {{{"pos", 3}, {"top", {{1, "0.5"}, {2, "0.25"}}}, {"tail_mass", "0.25"}}}}};
    EXPECT_THROW(protocol::parse_predict_response(too_long, pos, 1, 8), ProtocolError);
    EXPECT_THROW(protocol::parse_surprisal_response(json{{"id", 1}, {"s", {"-1"}}}, 1), ProtocolError);
    EXPECT_THROW(protocol::parse_surprisal_response(json{{"id", 1}, {"s", {"1", "2"}}}, 1), ProtocolError);
    for (const auto& f : load_fixture("error"))
        EXPECT_THROW(protocol::parse_surprisal_response(f.at("response"), 1), PredictorError);
}

TEST(FormatReal, RoundTripsDoubles) {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int it = 0; it < 10000; ++it) {
        const double v = u(rng) * std::pow(10.0, static_cast<double>(rng() % 20) - 10.0);
        ASSERT_EQ(protocol::parse_real(protocol::format_real(v), "v"), v);
    }
}

TEST(StdioClient, AgreesWithInProcessModel) {
    const ExternPredictor ext("stdio:" + kServer + " --order 1 --model-bytes 1234");
    EXPECT_EQ(ext.vocab_size(), 256u);
    EXPECT_EQ(ext.static_bytes(), 1234u);
    const BuiltinModel local(256, 1);
    std::mt19937_64 rng(92);
    auto toks = test::random_text_bytes(rng, 500);
    EXPECT_EQ(ext.surprisal(toks), local.surprisal(toks));
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < toks.size(); i += 3) {
        pos.push_back(i);
        toks[i] = kHole;
    }
    EXPECT_EQ(ext.predict(toks, pos, 64), local.predict(toks, pos, 64));
    EXPECT_EQ(ext.tokenize("h\xc3\xa9llo"), (TokenSeq{104, 195, 169, 108, 108, 111}));
    EXPECT_EQ(ext.detokenize(TokenSeq{104, 105}), "hi");
    EXPECT_THROW((void)ext.detokenize(TokenSeq{195}), PredictorError);
}

TEST(StdioClient, EpcRoundtripThroughServer) {
    const auto ext = std::make_shared<ExternPredictor>("stdio:" + kServer);
    const DeterminismGuard guarded(ext);
    std::mt19937_64 rng(93);
    const auto toks = test::random_text_bytes(rng, 1500);
    EPCConfig cfg;
    cfg.pm.p_mask = Rational::parse("0.6");
    const auto r = epc_compress(toks, toks.size(), guarded, cfg);
    EXPECT_EQ(epc_decompress(r.payload, guarded).tokens, toks);
}

TEST(StdioClient, ReplaysGoldenFixtures) {
    const auto path = std::filesystem::temp_directory_path() / "mlc_replay_fixture.jsonl";
    {
        std::ofstream out(path);
        for (const char* name : {"hello", "predict", "surprisal"})
            for (const auto& f : load_fixture(name)) out << f.dump() << '\n';
    }
    const ExternPredictor ext("stdio:" + kServer + " --replay " + path.string());
    const auto f = load_fixture("predict").at(0);
    TokenSeq ctx;
    for (const auto& v : f.at("request").at("tokens")) ctx.push_back(v.get<int>() < 0 ? kHole : v.get<Token>());
    const auto masked = f.at("request").at("masked").get<std::vector<std::size_t>>();
    const auto expect = protocol::parse_predict_response(f.at("response"), masked, 4, 256);
    EXPECT_EQ(ext.predict(ctx, masked, 4), expect);
    // a request outside the fixture set is answered with an error, not silently
    EXPECT_THROW((void)ext.predict(ctx, masked, 5), PredictorError);
    std::filesystem::remove(path);
}

TEST(StdioClient, DeadServerIsPredictorError) {
    EXPECT_THROW(ExternPredictor("stdio:exit 0"), PredictorError);
    EXPECT_THROW(ExternPredictor("ftp://nowhere"), ConfigError);
}

TEST(HttpClient, TalksToInProcessServer) {
    const Reference ref;
    httplib::Server srv;
    srv.Post("/v1", [&](const httplib::Request& req, httplib::Response& res) {
        res.set_content(ref.answer(json::parse(req.body)).dump(), "application/json");
    });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    {
        const ExternPredictor ext("http://127.0.0.1:" + std::to_string(port) + "/v1");
        const TokenSeq ctx{104, kHole, 108, 108, 111};
        const std::vector<std::size_t> pos{1};
        EXPECT_EQ(ext.predict(ctx, pos, 8), ref.model.predict(ctx, pos, 8));
    }
    srv.stop();
    t.join();
    EXPECT_THROW(ExternPredictor("http://127.0.0.1:" + std::to_string(port) + "/v1"), PredictorError);
}

}  // namespace
