#include <random>
#include <string>

#include <gtest/gtest.h>

#include "mlc/text.hpp"

namespace {

using namespace mlc;

TEST(Utf8, Validation) {
    EXPECT_TRUE(valid_utf8(""));
    EXPECT_TRUE(valid_utf8("plain ascii"));
    EXPECT_TRUE(valid_utf8("M\xc3\xbcllerstra\xc3\x9f" "e 20\xc2\xb0" "C \xf0\x9f\x8d\x9e"));
    EXPECT_FALSE(valid_utf8("\xc3"));
    EXPECT_FALSE(valid_utf8("\xc0\xaf"));          // overlong
    EXPECT_FALSE(valid_utf8("\xed\xa0\x80"));      // surrogate
    EXPECT_FALSE(valid_utf8("\xf4\x90\x80\x80"));  // above U+10FFFF
    EXPECT_FALSE(valid_utf8("\x80"));
}

TEST(Utf8, CharCountAndLossyDecode) {
    EXPECT_EQ(char_count("20\xc2\xb0" "C"), 4u);
    EXPECT_EQ(decode_utf8_lossy("a\xff" "b"), (std::u32string{U'a', 0xDCFF, U'b'}));
}

TEST(ByteTokenizer, RoundtripsArbitraryBytes) {
    const ByteTokenizer tok;
    std::mt19937_64 rng(101);
    std::string s(1000, '\0');
    for (auto& c : s) c = static_cast<char>(rng());
    EXPECT_EQ(tok.decode(tok.encode(s)), s);
    EXPECT_EQ(tok.vocab_size(), 256u);
    EXPECT_THROW(tok.decode(TokenSeq{256}), CodingError);
}

TEST(WordTokenizer, SplitsAndRebuilds) {
    const std::string text = "The bread, the Br\xc3\xb6tchen  and 42 loaves.\nDone!";
    const auto pieces = split_words(text);
    std::string joined;
    for (const auto p : pieces) joined += p;
    EXPECT_EQ(joined, text);
    EXPECT_EQ(pieces[0], "The");
    EXPECT_EQ(pieces[1], " ");
    EXPECT_EQ(pieces[3], ",");

    const auto tok = WordTokenizer::build(text);
    EXPECT_EQ(tok.decode(tok.encode(text)), text);
    EXPECT_THROW(tok.encode("unseen"), CodingError);
    const auto again = WordTokenizer::from_json(tok.to_json());
    EXPECT_EQ(again.vocab(), tok.vocab());
    EXPECT_EQ(tok.static_bytes(), tok.to_json().dump().size());
}

TEST(WordTokenizer, VocabularyIsSortedAndUnique) {
    const auto tok = WordTokenizer::build("b a b a c");
    EXPECT_EQ(tok.vocab(), (std::vector<std::string>{" ", "a", "b", "c"}));
    EXPECT_THROW(WordTokenizer({"x", "x"}), ConfigError);
}

}  // namespace
