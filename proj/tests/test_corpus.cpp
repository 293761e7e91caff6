#include <catch2/catch_amalgamated.hpp>

#include "forma/corpus.hpp"
#include "support/temp.hpp"

using namespace forma;

TEST_CASE("load_parallel pairs lines by position", "[corpus]") {
    synth::TempDir tmp;
    write_lines(tmp.file("c.en"), {"Hello"});
    write_lines(tmp.file("c.de"), {"Hallo"});
    ParallelCorpus c = load_parallel(tmp.file("c.en"), tmp.file("c.de"));
    REQUIRE(c.size() == 1);
    CHECK(c.pairs[0].source == "Hello");
    CHECK(c.pairs[0].target == "Hallo");
    CHECK(c.pairs[0].index == 0);
}

TEST_CASE("load_parallel rejects misaligned files naming both counts", "[corpus]") {
    synth::TempDir tmp;
    std::vector<std::string> ten(10, "a"), nine(9, "b");
    write_lines(tmp.file("c.en"), ten);
    write_lines(tmp.file("c.de"), nine);
    try {
        load_parallel(tmp.file("c.en"), tmp.file("c.de"));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find("10") != std::string::npos);
        CHECK(msg.find("9") != std::string::npos);
    }
}

TEST_CASE("load_parallel on empty files yields empty corpus", "[corpus]") {
    synth::TempDir tmp;
    write_lines(tmp.file("c.en"), {});
    write_lines(tmp.file("c.de"), {});
    CHECK(load_parallel(tmp.file("c.en"), tmp.file("c.de")).size() == 0);
}

TEST_CASE("load_parallel reports unreadable files", "[corpus]") {
    CHECK_THROWS_AS(load_parallel("/nonexistent/x.en", "/nonexistent/x.de"), IoError);
}

TEST_CASE("tokenize splits on whitespace runs", "[corpus]") {
    CHECK(tokenize("Wie geht es Ihnen ?") ==
          std::vector<std::string>{"Wie", "geht", "es", "Ihnen", "?"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("a  b") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("tokenize is idempotent on its own joined output", "[corpus]") {
    for (const std::string s : {"a  b\tc", "  x ", "one two  three"}) {
        auto once = tokenize(s);
        CHECK(tokenize(join_tokens(once)) == once);
    }
}

TEST_CASE("extract_vocabulary keeps non-singletons by default", "[corpus]") {
    Vocabulary v = extract_vocabulary({"a b a", "b c"});
    CHECK(v.size() == 2);  // a:2 b:2 c:1
    CHECK(v.contains("a"));
    CHECK(v.contains("b"));
    CHECK_FALSE(v.contains("c"));
}

TEST_CASE("extract_vocabulary of singletons is empty", "[corpus]") {
    Vocabulary v = extract_vocabulary({"x"});
    CHECK(v.size() == 0);
    CHECK(v.id_of("x") == v.unk_id());
}

TEST_CASE("extract_vocabulary with min_count 1 keeps every distinct token", "[corpus]") {
    Vocabulary v = extract_vocabulary({"a b a", "b c"}, 1);
    CHECK(v.size() == 3);
    CHECK_THROWS_AS(extract_vocabulary({"a"}, 0), UsageError);
}

TEST_CASE("vocabulary is monotone non-increasing in min_count", "[corpus]") {
    std::vector<std::string> sents = {"a a a b b c d d d d", "c e f f", "g a"};
    for (int m = 1; m < 6; ++m) {
        Vocabulary lo = extract_vocabulary(sents, m);
        Vocabulary hi = extract_vocabulary(sents, m + 1);
        for (const auto& t : hi.tokens()) CHECK(lo.contains(t));
        CHECK(hi.size() <= lo.size());
    }
}

TEST_CASE("load and save round-trip bit-exactly", "[corpus]") {
    synth::TempDir tmp;
    std::vector<std::string> src = {"Hello there", "", "a  double  space", "tab\tseparated"};
    std::vector<std::string> tgt = {"Hallo", "x", "y", "z"};
    write_lines(tmp.file("a.en"), src);
    write_lines(tmp.file("a.de"), tgt);
    ParallelCorpus c = load_parallel(tmp.file("a.en"), tmp.file("a.de"));
    save_parallel(c, tmp.file("b.en"), tmp.file("b.de"));
    CHECK(read_lines(tmp.file("b.en")) == src);
    CHECK(read_lines(tmp.file("b.de")) == tgt);
}

TEST_CASE("reserved unk token is escaped at load", "[corpus]") {
    synth::TempDir tmp;
    std::string line = std::string("say ") + std::string(kUnkToken) + " now";
    write_lines(tmp.file("u.en"), {line});
    write_lines(tmp.file("u.de"), {"x"});
    ParallelCorpus c = load_parallel(tmp.file("u.en"), tmp.file("u.de"));
    CHECK(c.pairs[0].source != line);
    auto toks = tokenize(c.pairs[0].source);
    REQUIRE(toks.size() == 3);
    CHECK(toks[1] == std::string(kEscapeMarker) + std::string(kUnkToken));
    // escaped corpus can build a vocabulary without tripping the guard
    CHECK_NOTHROW(extract_vocabulary({c.pairs[0].source}, 1));
    // but a raw reserved token is rejected
    CHECK_THROWS_AS(Vocabulary({std::string(kUnkToken)}), DataError);
}

TEST_CASE("labeled corpus TSV round-trips", "[corpus]") {
    synth::TempDir tmp;
    LabeledCorpus lc;
    lc.pairs.push_back({{"hi there", "hallo", 0, {}}, Formality::Formal});
    lc.pairs.push_back({{"yo", "he", 1, {}}, Formality::Informal});
    lc.pairs.push_back({{"meh", "na", 2, {}}, Formality::None});
    write_labeled_tsv(lc, tmp.file("l.tsv"));
    LabeledCorpus back = read_labeled_tsv(tmp.file("l.tsv"));
    REQUIRE(back.size() == 2);  // None rows stay out of the canonical file
    CHECK(back.pairs[0].label == Formality::Formal);
    CHECK(back.pairs[0].pair.source == "hi there");
    CHECK(back.pairs[1].pair.index == 1);

    write_labeled_tsv(lc, tmp.file("all.tsv"), true);
    CHECK(read_labeled_tsv(tmp.file("all.tsv")).size() == 3);
}

TEST_CASE("labeled TSV loader rejects duplicates and bad labels", "[corpus]") {
    synth::TempDir tmp;
    write_lines(tmp.file("bad.tsv"), {"0\tF\ta\tb", "0\tI\tc\td"});
    CHECK_THROWS_AS(read_labeled_tsv(tmp.file("bad.tsv")), DataError);
    write_lines(tmp.file("bad2.tsv"), {"0\tQ\ta\tb"});
    CHECK_THROWS_AS(read_labeled_tsv(tmp.file("bad2.tsv")), DataError);
}

TEST_CASE("aux score sidecar attaches by line", "[corpus]") {
    synth::TempDir tmp;
    write_lines(tmp.file("c.en"), {"a", "b"});
    write_lines(tmp.file("c.de"), {"x", "y"});
    write_lines(tmp.file("c.conf"), {"0.9", "0.3"});
    ParallelCorpus c = load_parallel(tmp.file("c.en"), tmp.file("c.de"));
    load_aux_scores(c, tmp.file("c.conf"));
    CHECK(c.pairs[0].aux_score == 0.9);
    CHECK(c.pairs[1].aux_score == 0.3);
    write_lines(tmp.file("short.conf"), {"0.5"});
    CHECK_THROWS_AS(load_aux_scores(c, tmp.file("short.conf")), DataError);
}
