#include <filesystem>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mlc/builtin_model.hpp"
#include "mlc/harness.hpp"
#include "mlc/text.hpp"

namespace {

using namespace mlc;

const std::string kCorpus = std::string(MLC_FIXTURE_DIR) + "/../../corpus";

std::string strip_wall_time(const std::string& csv) {
    return std::regex_replace(csv, std::regex(",[0-9.]+\n"), ",*\n");
}

SweepConfig one_point(CodecId codec, const char* p, std::uint32_t k, FallbackMode mode) {
    SweepConfig c;
    c.codecs = {codec};
    c.p_masks = {Rational::parse(p)};
    c.ks = {k};
    c.modes = {mode};
    c.seeds = 2;
    return c;
}

TEST(Corpus, SplitsAtParagraphs) {
    const std::string text = "aaaa\n\nbbbb\n\n\ncccc\n\ndd";
    // 6 + 7 chars reach the target of 12; the trailing 6 + 2 flush at the end
    const auto docs = split_documents("t", text, 12);
    ASSERT_EQ(docs.size(), 2u);
    EXPECT_EQ(docs[0].text, "aaaa\n\nbbbb\n\n\n");
    EXPECT_EQ(docs[1].text, "cccc\n\ndd");
    EXPECT_EQ(docs[0].name, "t#0");
    std::string joined;
    for (const auto& d : split_documents("t", text, 1)) joined += d.text;
    EXPECT_EQ(joined, text);
}

TEST(Corpus, BundledCorpusLoads) {
    const auto docs = load_corpus({kCorpus});
    EXPECT_GE(docs.size(), 30u);
    std::uint64_t chars = 0;
    for (const auto& d : docs) chars += char_count(d.text);
    EXPECT_GT(chars, 80000u);
    EXPECT_THROW(load_corpus({kCorpus + "/missing"}), ConfigError);
    const auto empty = std::filesystem::temp_directory_path() / "mlc_empty_corpus";
    std::filesystem::create_directories(empty);
    EXPECT_THROW(load_corpus({empty.string()}), ConfigError);
}

TEST(Grid, DefaultGridShape) {
    const SweepConfig cfg;
    // PM: 4 rates; EPC: 4 rates x 4 K x 2 modes
    EXPECT_EQ(expand_grid(cfg).size(), 4u + 32u);
    auto b = cfg;
    b.modes = {FallbackMode::budget};
    b.betas = {{0, 1}, {1, 4}};
    EXPECT_EQ(expand_grid(b).size(), 4u + 32u);
}

TEST(Sweep, OneConfigOneDocLedgerIdentity) {
    const ByteTokenizer tok;
    const BuiltinModel model(256, 1);
    const auto docs = prepare({{"d", "The quick brown fox jumps over the lazy dog. The dog sleeps."}}, tok);
    for (const auto codec : {CodecId::pm, CodecId::epc, CodecId::patch}) {
        const auto rows = run_sweep(one_point(codec, "0.4", 4, FallbackMode::full), docs, tok, model);
        ASSERT_EQ(rows.size(), 1u);
        const auto& r = rows[0];
        EXPECT_EQ(r.ledger.total_bits(), 8 * r.payload_bytes);
        EXPECT_TRUE(r.ledger_ok);
        EXPECT_TRUE(r.seed_invariant);
        EXPECT_DOUBLE_EQ(r.bpc(), 8.0 * static_cast<double>(r.payload_bytes) / static_cast<double>(r.chars));
        if (codec != CodecId::pm) EXPECT_DOUBLE_EQ(r.char_fid, 1.0);
    }
}

TEST(Sweep, EmptyCorpusIsError) {
    const ByteTokenizer tok;
    const BuiltinModel model(256, 0);
    EXPECT_THROW(run_sweep(SweepConfig{}, {}, tok, model), ConfigError);
}

class CorpusSweep : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        docs_ = new std::vector<PreparedDoc>(prepare(load_corpus({kCorpus}), ByteTokenizer{}));
    }
    static void TearDownTestSuite() { delete docs_; }
    static std::vector<PreparedDoc>* docs_;
};
std::vector<PreparedDoc>* CorpusSweep::docs_ = nullptr;

TEST_F(CorpusSweep, PmFidelityFallsAsMaskingRises) {
    const ByteTokenizer tok;
    for (const unsigned order : {0u, 1u}) {
        const BuiltinModel model(256, order);
        SweepConfig cfg;
        cfg.codecs = {CodecId::pm};
        cfg.seeds = 1;
        cfg.workers = 4;
        const auto rows = run_sweep(cfg, *docs_, tok, model);
        ASSERT_EQ(rows.size(), 4u);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            EXPECT_LE(rows[i].char_fid, rows[i - 1].char_fid) << "order " << order;
            EXPECT_LT(rows[i].bpc(), rows[i - 1].bpc());
        }
    }
}

TEST_F(CorpusSweep, EpcFullIsExactAtEveryGridPoint) {
    const ByteTokenizer tok;
    const BuiltinModel model(256, 0);
    SweepConfig cfg;
    cfg.codecs = {CodecId::epc};
    cfg.modes = {FallbackMode::full};
    cfg.seeds = 1;
    cfg.workers = 4;
    std::vector<PreparedDoc> few(docs_->begin(), docs_->begin() + 6);
    for (const auto& r : run_sweep(cfg, few, tok, model)) {
        EXPECT_DOUBLE_EQ(r.char_fid, 1.0);
        EXPECT_DOUBLE_EQ(r.chrf, 1.0);
        EXPECT_EQ(r.error_bound, 0.0);
        EXPECT_TRUE(r.ledger_ok);
    }
}

TEST_F(CorpusSweep, CsvIsReproducibleAcrossWorkerCounts) {
    const ByteTokenizer tok;
    const BuiltinModel model(256, 0);
    SweepConfig cfg;
    cfg.p_masks = {{2, 5}, {4, 5}};
    cfg.ks = {4, 16};
    cfg.codecs = {CodecId::pm, CodecId::epc, CodecId::patch};
    cfg.seeds = 2;
    std::vector<PreparedDoc> few(docs_->begin(), docs_->begin() + 3);
    cfg.workers = 1;
    const auto a = to_csv(run_sweep(cfg, few, tok, model));
    cfg.workers = 5;
    const auto rows = run_sweep(cfg, few, tok, model);
    EXPECT_EQ(strip_wall_time(a), strip_wall_time(to_csv(rows)));
    for (const auto& r : rows) EXPECT_TRUE(r.seed_invariant && r.ledger_ok);
    const auto j = to_json(rows);
    EXPECT_EQ(j.at("rows").size(), rows.size());
    EXPECT_TRUE(j.at("rows")[0].at("bertscore").is_null());
    EXPECT_EQ(j.at("metadata").at("bertscore"), "unsupported");
}

TEST(Csv, HeaderMatchesDocumentedColumns) {
    const auto csv = to_csv({});
    std::string header;
    for (std::size_t i = 0; i < csv_columns().size(); ++i) header += (i ? "," : "") + csv_columns()[i];
    EXPECT_EQ(csv, header + "\n");
}

TEST(Plotdata, FrontsAndRawSeries) {
    std::string csv = "codec,mode,p_mask,k,beta,bpc,char_fid\n";
    csv += "pm,-,0.2,0,0,5.0,0.9\n";
    csv += "epc,off,0.2,4,0,3.0,0.8\n";
    csv += "epc,off,0.4,4,0,2.0,0.85\n";  // dominates the 3.0 point
    csv += "epc,off,0.6,4,0,4.0,0.95\n";
    csv += "epc,off,0.8,4,0,1.0,0.5\n";
    const auto j = plotdata_from_csv(csv);
    const auto& pm = j.at("series").at("pm");
    EXPECT_EQ(pm.at("raw").size(), 1u);
    EXPECT_EQ(pm.at("front").size(), 1u);
    const auto& epc = j.at("series").at("epc:off");
    EXPECT_EQ(epc.at("raw").size(), 4u);
    const auto& front = epc.at("front");
    ASSERT_EQ(front.size(), 3u);
    for (std::size_t i = 1; i < front.size(); ++i) {
        EXPECT_GT(front[i].at("rate").get<double>(), front[i - 1].at("rate").get<double>());
        EXPECT_GE(front[i].at("fidelity").get<double>(), front[i - 1].at("fidelity").get<double>());
    }
    EXPECT_EQ(front[1].at("label"), "p=0.4,K=4");
    EXPECT_THROW(plotdata_from_csv("codec,mode\npm,-\n"), ConfigError);
}

TEST(Predictors, SpecParsing) {
    EXPECT_EQ(make_predictor("builtin:order1", 256)->name(), "builtin:order1");
    EXPECT_THROW(make_predictor("builtin:order7", 256), ConfigError);
}

}  // namespace
