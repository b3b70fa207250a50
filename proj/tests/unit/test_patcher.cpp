#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mlc/builtin_model.hpp"
#include "mlc/codec_pm.hpp"
#include "mlc/container.hpp"
#include "mlc/patcher.hpp"
#include "support/predictors.hpp"

namespace {

using namespace mlc;

PatchConfig patch_cfg(std::uint32_t k, FallbackMode mode, const char* beta = "0") {
    PatchConfig c;
    c.k = k;
    c.mode = mode;
    c.beta = Rational::parse(beta);
    return c;
}

TokenSeq corrupt(std::mt19937_64& rng, TokenSeq t, std::uint32_t vocab, std::size_t edits) {
    for (std::size_t e = 0; e < edits && !t.empty(); ++e) {
        const auto i = rng() % t.size();
        t[i] = static_cast<Token>((t[i] + 1 + rng() % (vocab - 1)) % vocab);
    }
    return t;
}

TEST(Patch, IdenticalInputsNeedNoCorrections) {
    std::mt19937_64 rng(51);
    const BuiltinModel model(256, 1);
    const auto toks = test::random_text_bytes(rng, 700);
    const auto r = make_patch(toks, toks, toks.size(), model, patch_cfg(4, FallbackMode::full));
    EXPECT_EQ(r.residual.flags, std::vector<std::uint8_t>(toks.size(), 0));
    EXPECT_TRUE(r.residual.corrections.empty());
    EXPECT_TRUE(r.payload.ranks.empty());
    EXPECT_TRUE(r.payload.fallback.empty());
    EXPECT_EQ(apply_patch(toks, r.payload, model).tokens, toks);
}

TEST(Patch, SingleMismatchAtRankThree) {
    const std::uint32_t v = 50;
    std::mt19937_64 rng(52);
    const auto orig = test::random_tokens(rng, 200, v);
    std::vector<std::uint32_t> ranks(orig.size(), 1);
    ranks[77] = 3;
    const test::ScriptedPredictor pred(v, orig, ranks, std::vector<double>(orig.size(), 1.0),
                                       test::rank_shape(v, 0.9, 0.08));
    auto recon = orig;
    // truth+5 sits at rank 6, below the truth, so dropping it leaves the truth at rank 3
    recon[77] = (orig[77] + 5) % v;
    const auto r = make_patch(orig, recon, orig.size(), pred, patch_cfg(4, FallbackMode::full));
    ASSERT_EQ(r.residual.corrections.size(), 1u);
    EXPECT_EQ(r.residual.corrections[0], (Correction{CorrectionKind::rank, 3}));
    EXPECT_TRUE(r.residual.fallback_tokens.empty());
    EXPECT_EQ(apply_patch(recon, read_payload(write_payload(r.payload)), pred).tokens, orig);
}

TEST(Patch, WrongTokenAboveTruthShiftsRank) {
    const std::uint32_t v = 50;
    std::mt19937_64 rng(53);
    const auto orig = test::random_tokens(rng, 50, v);
    std::vector<std::uint32_t> ranks(orig.size(), 1);
    ranks[10] = 2;
    const test::ScriptedPredictor pred(v, orig, ranks, std::vector<double>(orig.size(), 1.0),
                                       test::rank_shape(v, 0.9, 0.08));
    auto recon = orig;
    recon[10] = (orig[10] + 1) % v;  // the rank-1 filler
    const auto r = make_patch(orig, recon, orig.size(), pred, patch_cfg(4, FallbackMode::full));
    EXPECT_EQ(r.residual.corrections.at(0), (Correction{CorrectionKind::rank, 1}));
    EXPECT_EQ(apply_patch(recon, r.payload, pred).tokens, orig);
}

TEST(Patch, FullModeRoundtripsArbitraryReconstructions) {
    std::mt19937_64 rng(54);
    const BuiltinModel model(256, 1);
    for (int it = 0; it < 40; ++it) {
        const auto orig = test::random_text_bytes(rng, 1 + rng() % 1500);
        const auto recon = corrupt(rng, orig, 256, rng() % (orig.size() + 1));
        auto cfg = patch_cfg(it % 2 ? 16 : 4, FallbackMode::full);
        cfg.full_context = it % 3 == 0;
        const auto r = make_patch(orig, recon, orig.size(), model, cfg);
        const auto out = apply_patch(recon, read_payload(write_payload(r.payload)), model);
        ASSERT_EQ(out.tokens, orig) << "iteration " << it;
        EXPECT_EQ(out.error_bound, 0.0);
    }
}

TEST(Patch, RepairsPMReconstruction) {
    std::mt19937_64 rng(55);
    const BuiltinModel model(256, 1);
    const auto orig = test::random_text_bytes(rng, 2000);
    PMConfig pm;
    pm.p_mask = Rational::parse("0.6");
    const auto enc = pm_compress(orig, orig.size(), model, pm);
    const auto recon = pm_decompress(enc.payload, model);
    ASSERT_NE(recon, orig);
    const auto r = make_patch(orig, recon, orig.size(), model, patch_cfg(4, FallbackMode::full));
    EXPECT_EQ(apply_patch(recon, r.payload, model).tokens, orig);
}

TEST(Patch, OffModeLeavesSkipsAndReportsBound) {
    std::mt19937_64 rng(56);
    const test::UniformPredictor uniform(256);
    const auto orig = test::random_tokens(rng, 1000, 256);
    const auto recon = corrupt(rng, orig, 256, 100);
    const auto r = make_patch(orig, recon, orig.size(), uniform, patch_cfg(4, FallbackMode::off));
    EXPECT_TRUE(r.payload.fallback.empty());
    const auto out = apply_patch(recon, r.payload, uniform);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < orig.size(); ++i) wrong += out.tokens[i] != orig[i];
    EXPECT_EQ(wrong, r.residual.skip_count());
    EXPECT_DOUBLE_EQ(out.error_bound, static_cast<double>(wrong) / 1000.0);
    EXPECT_GT(wrong, 0u);
}

TEST(Patch, LengthMismatchIsAlignmentError) {
    const BuiltinModel model(4, 0);
    const TokenSeq a{1, 2, 3};
    const TokenSeq b{1, 2};
    EXPECT_THROW(make_patch(a, b, 3, model, patch_cfg(4, FallbackMode::full)), AlignmentError);
    const auto r = make_patch(a, a, 3, model, patch_cfg(4, FallbackMode::full));
    EXPECT_THROW(apply_patch(b, r.payload, model), AlignmentError);
}

TEST(Patch, WrongCodecIsFormatError) {
    const BuiltinModel model(4, 0);
    const TokenSeq a{1, 2, 3};
    PMConfig pm;
    const auto enc = pm_compress(a, 3, model, pm);
    EXPECT_THROW(apply_patch(a, enc.payload, model), FormatError);
}

}  // namespace
