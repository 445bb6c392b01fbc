#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/tmpdir.hpp"
#include "votestack/textprep.hpp"

using namespace votestack;
using votestack::testing::TmpDir;

namespace {

const PreprocessOptions kDefaults{};

std::string shipped_dictionary_path() {
    return std::string(VOTESTACK_DATA_DIR) + "/normalization_dictionary.tsv";
}

}  // namespace

TEST_CASE("normalize_text applies the full rule chain") {
    CHECK(normalize_text("Hôm nay trời nắng ĐẸP!!! 123", kDefaults) ==
          "hôm nay trời nắng đẹp");
}

TEST_CASE("normalize_text strips URLs before anything else") {
    CHECK(normalize_text("xem tại http://a.b/c nhé", kDefaults) ==
          "xem tại nhé");
    CHECK(normalize_text("xem HTTPS://Foo.Bar rồi www.x.y nhé", kDefaults) ==
          "xem rồi nhé");
}

TEST_CASE("normalize_text removes emoticons and digits") {
    CHECK(normalize_text("Diễn viên già vãi -.-", kDefaults) ==
          "diễn viên già vãi");
    CHECK(normalize_text("vui :)) 100%", kDefaults) == "vui");
}

TEST_CASE("normalize_text keeps the underscore compound joiner") {
    CHECK(normalize_text("giáo_trình đầy đủ!", kDefaults) ==
          "giáo_trình đầy đủ");
}

TEST_CASE("normalize_text with all flags off is the identity") {
    PreprocessOptions off;
    off.lowercase = off.strip_urls = off.strip_non_letters = off.collapse_whitespace =
        off.apply_dictionary = false;
    for (const char* s : {"", "  A  B  ", "Trời ơi!!! http://x.y 123", "-.-"}) {
        CHECK(normalize_text(s, off) == s);
    }
}

TEST_CASE("normalize_text is idempotent") {
    // Over assorted option subsets and inputs, normalizing twice equals once.
    std::vector<PreprocessOptions> option_sets;
    for (int bits = 0; bits < 16; ++bits) {
        PreprocessOptions o;
        o.strip_urls = bits & 1;
        o.lowercase = bits & 2;
        o.strip_non_letters = bits & 4;
        o.collapse_whitespace = bits & 8;
        option_sets.push_back(o);
    }
    const std::vector<std::string> inputs = {
        "Hôm nay TRỜI đẹp!!!",
        "  nhiều   khoảng    trắng  ",
        "link http://vn.example/z?q=1 cuối",
        "emoji \U0001F600 và số 42",
        "www.site.vn đầu câu",
        "ĐẸP Đẹp đẹp",
    };
    for (const auto& opts : option_sets) {
        for (const auto& input : inputs) {
            std::string once = normalize_text(input, opts);
            CHECK(normalize_text(once, opts) == once);
        }
    }
}

TEST_CASE("shipped dictionary reproduces the seed entries") {
    NormalizationDictionary dict = NormalizationDictionary::load(shipped_dictionary_path());
    CHECK(dict.size() == 4);
    CHECK(apply_dictionary({"chờiiii"}, dict) == std::vector<std::string>{"trời"});
    CHECK(apply_dictionary({"vklllll"}, dict) == std::vector<std::string>{"vkl"});
    CHECK(apply_dictionary({"chetme"}, dict) ==
          std::vector<std::string>{"chết", "mẹ"});
    CHECK(apply_dictionary({"kbh"}, dict) ==
          std::vector<std::string>{"không", "bao", "giờ"});
}

TEST_CASE("apply_dictionary passes unknown tokens through") {
    auto dict = NormalizationDictionary::from_pairs({{"kbh", "không bao giờ"}});
    CHECK(apply_dictionary({"nhà"}, dict) == std::vector<std::string>{"nhà"});
    CHECK(apply_dictionary({"nhà", "kbh", "đi"}, dict) ==
          std::vector<std::string>{"nhà", "không", "bao", "giờ", "đi"});
}

TEST_CASE("dictionary token count only changes by multi-word expansion") {
    auto dict = NormalizationDictionary::from_pairs(
        {{"a", "b"}, {"cd", "c d"}, {"xyz", "x y z"}});
    std::vector<std::string> tokens = {"a", "q", "cd", "xyz", "a"};
    auto out = apply_dictionary(tokens, dict);
    // 1 + 1 + 2 + 3 + 1
    CHECK(out.size() == 8);
}

TEST_CASE("dictionary load validates entries") {
    TmpDir tmp("dict");
    CHECK_THROWS_AS(
        NormalizationDictionary::load(tmp.write("self.tsv", "abc\tabc\n")), FormatError);
    CHECK_THROWS_AS(
        NormalizationDictionary::load(tmp.write("dup.tsv", "a\tb\na\tc\n")), FormatError);
    CHECK_THROWS_AS(
        NormalizationDictionary::load(tmp.write("upper.tsv", "Abc\txyz\n")), FormatError);
    CHECK_THROWS_AS(
        NormalizationDictionary::load(tmp.write("notab.tsv", "abc xyz\n")), FormatError);
    // Comments and blank lines are fine.
    auto dict = NormalizationDictionary::load(
        tmp.write("ok.tsv", "# comment\n\nkbh\tkhông bao giờ\n"));
    CHECK(dict.size() == 1);
}

TEST_CASE("dictionary content hash ignores file layout") {
    TmpDir tmp("dict");
    auto a = NormalizationDictionary::load(tmp.write("a.tsv", "x\ty\nk\tv\n"));
    auto b = NormalizationDictionary::load(tmp.write("b.tsv", "# note\nk\tv\nx\ty\n"));
    CHECK(a.content_hash() == b.content_hash());
    auto c = NormalizationDictionary::load(tmp.write("c.tsv", "x\ty\nk\tw\n"));
    CHECK(a.content_hash() != c.content_hash());
}

TEST_CASE("tokenize splits on whitespace") {
    CHECK(tokenize("hôm nay trời đẹp") ==
          std::vector<std::string>{"hôm", "nay", "trời", "đẹp"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("   ") == std::vector<std::string>{});
}

TEST_CASE("tokenize with lexicon joins greedy longest matches") {
    auto lex = CompoundLexicon::from_phrases({"giáo trình", "đầy đủ"});
    CHECK(tokenize("giáo trình đầy đủ", lex) ==
          std::vector<std::string>{"giáo_trình", "đầy_đủ"});

    // Longest match wins over a shorter prefix entry.
    auto lex2 = CompoundLexicon::from_phrases({"a b", "a b c"});
    CHECK(tokenize("a b c d", lex2) == std::vector<std::string>{"a_b_c", "d"});

    // Greedy left-to-right: the first match consumes its syllables.
    auto lex3 = CompoundLexicon::from_phrases({"a b", "b c"});
    CHECK(tokenize("a b c", lex3) == std::vector<std::string>{"a_b", "c"});
}

TEST_CASE("tokenize round-trip holds on randomized lexicons and sentences") {
    // Property: joining tokens with spaces and replacing '_' by space
    // reproduces the input syllable sequence, for any lexicon.
    SplitMix64 rng(2025);
    const std::vector<std::string> alphabet = {"ba", "ca", "da", "la", "ma", "na",
                                               "trời", "đẹp"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> phrases;
        int n_phrases = static_cast<int>(rng.next_below(4));
        for (int p = 0; p < n_phrases; ++p) {
            int len = 2 + static_cast<int>(rng.next_below(2));
            std::string phrase;
            for (int s = 0; s < len; ++s) {
                if (s) phrase += ' ';
                phrase += alphabet[rng.next_below(alphabet.size())];
            }
            phrases.push_back(phrase);
        }
        auto lex = CompoundLexicon::from_phrases(phrases);

        int n_syllables = static_cast<int>(rng.next_below(12));
        std::string sentence;
        for (int s = 0; s < n_syllables; ++s) {
            if (s) sentence += ' ';
            sentence += alphabet[rng.next_below(alphabet.size())];
        }

        auto tokens = tokenize(sentence, lex);
        std::string joined;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            CHECK(!tokens[i].empty());
            if (i) joined += ' ';
            joined += tokens[i];
        }
        for (auto& ch : joined) {
            if (ch == '_') ch = ' ';
        }
        CHECK(joined == sentence);
    }
}

TEST_CASE("normalize_text idempotence fuzzing") {
    // Random mixtures of Vietnamese letters, digits, punctuation, emoji and
    // URLs stay fixed under a second normalization, for every option subset.
    SplitMix64 rng(777);
    const std::vector<std::string> pieces = {
        "trời",  "ĐẸP", "abc",   "XYZ",  "123",  "!!!",  "-.-",
        "\U0001F600", "http://a.b/c",  "www.x", "_",    " ",    "  ",   "\t",
        ":))",        "100%",          "này", "#tag", "@user", " "};
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        int n = static_cast<int>(rng.next_below(10));
        for (int i = 0; i < n; ++i) text += pieces[rng.next_below(pieces.size())];
        PreprocessOptions opts;
        opts.strip_urls = rng.next_below(2);
        opts.lowercase = rng.next_below(2);
        opts.strip_non_letters = rng.next_below(2);
        opts.collapse_whitespace = rng.next_below(2);
        std::string once = normalize_text(text, opts);
        CHECK(normalize_text(once, opts) == once);
    }
}

TEST_CASE("tokenize round-trip reproduces the syllable sequence") {
    auto lex = CompoundLexicon::from_phrases({"môn học", "sinh viên giỏi"});
    const std::vector<std::string> sentences = {
        "môn học hay",
        "sinh viên giỏi học môn học",
        "không khớp gì cả",
        "",
    };
    for (const auto& s : sentences) {
        auto tokens = tokenize(s, lex);
        std::string joined;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) joined += ' ';
            joined += tokens[i];
        }
        for (auto& ch : joined) {
            if (ch == '_') ch = ' ';
        }
        CHECK(joined == s);
    }
}
