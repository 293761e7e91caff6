#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "forma/lm.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"
#include "support/temp.hpp"

using namespace forma;

namespace {

std::vector<std::string> fixture_sentences() {
    return {
        "Sie sind sehr nett",       "wie geht es Ihnen heute",  "du bist echt cool",
        "was machst du so",         "das ist ein Test",         "Sie kommen morgen",
        "er sagt nichts dazu",      "wir gehen nach Hause",     "kommst du mit",
        "Ihnen gefällt das sicher", "",                         "ein",
        "a b c d e f g",            "Sie Sie Sie",              "unbekannt wort hier",
    };
}

NGramModel fixture_model(int order, double k = 0.1) {
    auto sents = fixture_sentences();
    return train_lm(sents, extract_vocabulary(sents, 2), order, k);
}

oracle::Lm fixture_oracle(int order, double k = 0.1) {
    auto sents = fixture_sentences();
    Vocabulary v = extract_vocabulary(sents, 2);
    std::set<std::string> vocab(v.tokens().begin(), v.tokens().end());
    return oracle::train(sents, vocab, order, k);
}

}  // namespace

TEST_CASE("unigram counts match hand enumeration", "[lm]") {
    Vocabulary v({"a"});
    NGramModel m = train_lm({"a a"}, v, 1);
    CHECK(m.count({"a"}) == 2);
    CHECK(m.count({std::string(kEosToken)}) == 1);
}

TEST_CASE("full OOV sentence maps to unk", "[lm]") {
    Vocabulary v({"a"});
    NGramModel m = train_lm({"b"}, v, 1);
    CHECK(m.count({std::string(kUnkToken)}) == 1);
    CHECK(m.count({std::string(kEosToken)}) == 1);
    CHECK(m.count({"a"}) == 0);
}

TEST_CASE("bigram counts include begin and end markers", "[lm]") {
    Vocabulary v({"a", "b"});
    NGramModel m = train_lm({"a b"}, v, 2);
    CHECK(m.count({std::string(kBosToken), "a"}) == 1);
    CHECK(m.count({"a", "b"}) == 1);
    CHECK(m.count({"b", std::string(kEosToken)}) == 1);
    CHECK(m.count({"b", "a"}) == 0);
}

TEST_CASE("train_lm rejects empty input and bad parameters", "[lm]") {
    Vocabulary v({"a"});
    CHECK_THROWS_AS(train_lm({}, v, 1), DataError);
    CHECK_THROWS_AS(train_lm({"a"}, v, 0), UsageError);
    CHECK_THROWS_AS(train_lm({"a"}, v, 1, 0.0), UsageError);
}

TEST_CASE("unigram perplexity matches the frozen hand computation", "[lm]") {
    // p(a) = (3+0.01)/(4+0.03), p(EOS) = (1+0.01)/(4+0.03)
    Vocabulary v({"a"});
    NGramModel m = train_lm({"a a a"}, v, 1, 0.01);
    CHECK_THAT(m.next_token_probability({}, "a"),
               Catch::Matchers::WithinRel(3.01 / 4.03, 1e-12));
    CHECK_THAT(m.sentence_perplexity("a"),
               Catch::Matchers::WithinRel(2.3113255038364273, 1e-12));
}

TEST_CASE("order-2 perplexity matches the frozen oracle value", "[lm]") {
    Vocabulary v({"a", "b"});
    NGramModel m = train_lm({"a b", "a a"}, v, 2, 0.1);
    CHECK_THAT(m.sentence_perplexity("a b"),
               Catch::Matchers::WithinRel(1.6270420613971444, 1e-12));
}

TEST_CASE("perplexity matches the brute-force oracle on fixture sentences", "[lm]") {
    for (int order : {1, 2, 3}) {
        NGramModel m = fixture_model(order);
        oracle::Lm ref = fixture_oracle(order);
        for (const auto& s : fixture_sentences()) {
            double got = m.sentence_perplexity(s);
            double want = ref.sentence_pp(s);
            CHECK_THAT(got, Catch::Matchers::WithinRel(want, 1e-9));
        }
        // held-out material, including full-OOV text
        for (const std::string& s :
             {std::string("Sie gehen heute"), std::string("xxx yyy zzz"), std::string("du")})
            CHECK_THAT(m.sentence_perplexity(s), Catch::Matchers::WithinRel(ref.sentence_pp(s), 1e-9));
    }
}

TEST_CASE("empty sentence scores as the single EOS prediction", "[lm]") {
    NGramModel m = fixture_model(3);
    double p_eos = m.next_token_probability({}, std::string(kEosToken));
    CHECK_THAT(m.sentence_perplexity(""), Catch::Matchers::WithinRel(1.0 / p_eos, 1e-12));
}

TEST_CASE("next-token distribution sums to one over random contexts", "[lm]") {
    NGramModel m = fixture_model(3);
    std::vector<std::string> events = m.vocab().tokens();
    events.push_back(std::string(kUnkToken));
    events.push_back(std::string(kEosToken));
    std::mt19937_64 rng(7);
    std::vector<std::string> pool = m.vocab().tokens();
    pool.push_back("OOVWORD");
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::string> ctx;
        int len = static_cast<int>(bounded_rand(rng, 3));
        for (int i = 0; i < len; ++i) ctx.push_back(pool[bounded_rand(rng, pool.size())]);
        double sum = 0;
        for (const auto& w : events) sum += m.next_token_probability(ctx, w);
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("all probabilities stay in (0,1]", "[lm]") {
    NGramModel m = fixture_model(2, 0.5);
    for (const std::string& w : {std::string("Sie"), std::string(kEosToken), std::string(kUnkToken)})
        for (const std::vector<std::string>& ctx :
             {std::vector<std::string>{}, {"Sie"}, {"zzz"}, {"du", "Sie"}}) {
            double p = m.next_token_probability(ctx, w);
            CHECK(p > 0.0);
            CHECK(p <= 1.0);
        }
}

TEST_CASE("in-domain text scores lower perplexity than OOV text", "[lm]") {
    NGramModel m = fixture_model(3);
    oracle::Lm ref = fixture_oracle(3);
    std::string in_domain = "Sie sind sehr nett";
    std::string oov = "qqq www eee rrr";  // same token count
    CHECK(m.sentence_perplexity(in_domain) < m.sentence_perplexity(oov));
    CHECK(ref.sentence_pp(in_domain) < ref.sentence_pp(oov));
}

TEST_CASE("identical counts give identical perplexities", "[lm]") {
    NGramModel a = fixture_model(3);
    NGramModel b = fixture_model(3);
    for (const auto& s : fixture_sentences())
        CHECK(a.sentence_perplexity(s) == b.sentence_perplexity(s));
}

TEST_CASE("rank_by_diff sorts ascending with index ties", "[lm]") {
    std::vector<PerplexityScore> scores = {
        {0, 0, 0, -2.0}, {1, 0, 0, 0.5}, {2, 0, 0, -0.1}};
    rank_by_diff(scores);
    CHECK(scores[0].pair_index == 0);
    CHECK(scores[1].pair_index == 2);
    CHECK(scores[2].pair_index == 1);

    std::vector<PerplexityScore> ties = {{2, 0, 0, 1.0}, {0, 0, 0, 1.0}, {1, 0, 0, 1.0}};
    rank_by_diff(ties);
    CHECK(ties[0].pair_index == 0);
    CHECK(ties[1].pair_index == 1);
    CHECK(ties[2].pair_index == 2);
}

TEST_CASE("identical models rank in original order with zero diffs", "[lm]") {
    NGramModel m = fixture_model(2);
    std::vector<std::string> targets = {"Sie sind", "du bist", "was", ""};
    auto scores = perplexity_difference_rank(targets, m, m);
    REQUIRE(scores.size() == targets.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        CHECK(scores[i].pair_index == static_cast<int64_t>(i));
        CHECK(scores[i].diff == 0.0);
    }
}

TEST_CASE("in-domain sentences rank before OOV sentences", "[lm]") {
    auto in_sents = std::vector<std::string>{"Sie sind nett", "Sie kommen heute", "Ihnen gefällt das"};
    auto gen_sents = std::vector<std::string>{"w1 w2 w3", "w4 w5 w6", "w2 w4 w6", "Sie w1 w5"};
    Vocabulary v = extract_vocabulary(in_sents, 1);
    NGramModel lm_in = train_lm(in_sents, v, 3);
    NGramModel lm_gen = train_lm(gen_sents, v, 3);
    std::vector<std::string> targets = {"qqq www eee", "Sie sind nett"};
    auto scores = perplexity_difference_rank(targets, lm_in, lm_gen);
    CHECK(scores[0].pair_index == 1);  // verbatim in-domain sentence first
    CHECK(scores[1].pair_index == 0);
}

TEST_CASE("ranking rejects mismatched models", "[lm]") {
    auto sents = fixture_sentences();
    NGramModel a = train_lm(sents, extract_vocabulary(sents, 2), 2);
    NGramModel b = train_lm(sents, extract_vocabulary(sents, 2), 3);
    CHECK_THROWS_AS(perplexity_difference_rank({"x"}, a, b), UsageError);
    NGramModel c = train_lm(sents, extract_vocabulary(sents, 3), 2);
    CHECK_THROWS_AS(perplexity_difference_rank({"x"}, a, c), UsageError);
}

TEST_CASE("ranking output is a permutation and diff is exact", "[lm]") {
    auto fx = synth::make_mining_fixture(200, 30, 11);
    Vocabulary v = extract_vocabulary(fx.formal_seed);
    NGramModel lm_in = train_lm(fx.formal_seed, v, 3);
    NGramModel lm_gen = train_lm_sampled(fx.pool.target_sentences(), v, 3, 0.1, 100, 13);
    auto scores = perplexity_difference_rank(fx.pool.target_sentences(), lm_in, lm_gen);
    std::vector<char> seen(scores.size(), 0);
    for (const auto& s : scores) {
        CHECK(!seen[static_cast<size_t>(s.pair_index)]);
        seen[static_cast<size_t>(s.pair_index)] = 1;
        CHECK(s.diff == s.pp_in - s.pp_gen);
    }
    for (size_t i = 1; i < scores.size(); ++i) CHECK(scores[i - 1].diff <= scores[i].diff);
}

TEST_CASE("ranking is invariant under worker count", "[lm]") {
    auto fx = synth::make_mining_fixture(300, 40, 5);
    Vocabulary v = extract_vocabulary(fx.formal_seed);
    NGramModel lm_in = train_lm(fx.formal_seed, v, 3);
    NGramModel lm_gen = train_lm_sampled(fx.pool.target_sentences(), v, 3, 0.1, 150, 13);
    auto base = perplexity_difference_rank(fx.pool.target_sentences(), lm_in, lm_gen, 1);
    for (unsigned threads : {2u, 4u, 8u}) {
        auto other = perplexity_difference_rank(fx.pool.target_sentences(), lm_in, lm_gen, threads);
        REQUIRE(other.size() == base.size());
        for (size_t i = 0; i < base.size(); ++i) {
            CHECK(other[i].pair_index == base[i].pair_index);
            CHECK(other[i].diff == base[i].diff);
        }
    }
}

TEST_CASE("adding a shared sentence keeps diff signs on a separated fixture", "[lm]") {
    auto run = [](bool with_extra) {
        std::vector<std::string> in_sents = {"fm1 fm2 w1", "fm3 fm1 w2", "fm2 fm3 w3"};
        std::vector<std::string> gen_sents = {"w1 w2 w3", "w4 w5 w1", "w2 w4 w5"};
        if (with_extra) {
            in_sents.push_back("neutral filler line");
            gen_sents.push_back("neutral filler line");
        }
        Vocabulary v = extract_vocabulary(in_sents, 1);
        NGramModel lm_in = train_lm(in_sents, v, 3);
        NGramModel lm_gen = train_lm(gen_sents, v, 3);
        std::vector<std::string> held_out = {"fm1 fm2 w1", "w4 w5 w2", "fm3 w1 w4"};
        std::vector<int> signs;
        for (const auto& s : held_out) {
            double d = lm_in.sentence_perplexity(s) - lm_gen.sentence_perplexity(s);
            signs.push_back(d < 0 ? -1 : d > 0 ? 1 : 0);
        }
        return signs;
    };
    CHECK(run(false) == run(true));
    CHECK(run(true) == run(true));  // determinism
}

TEST_CASE("model serialization round-trips scores exactly", "[lm]") {
    synth::TempDir tmp;
    NGramModel m = fixture_model(3);
    m.save(tmp.file("m.lm"));
    NGramModel back = NGramModel::load(tmp.file("m.lm"));
    CHECK(back.order() == m.order());
    CHECK(back.k() == m.k());
    CHECK(back.vocab_hash() == m.vocab_hash());
    for (const auto& s : fixture_sentences())
        CHECK(back.sentence_perplexity(s) == m.sentence_perplexity(s));
    // saved again, the file is byte-identical
    back.save(tmp.file("m2.lm"));
    CHECK(read_lines(tmp.file("m.lm")) == read_lines(tmp.file("m2.lm")));
}

TEST_CASE("sampled training is seed-deterministic", "[lm]") {
    auto fx = synth::make_mining_fixture(200, 10, 3);
    Vocabulary v = extract_vocabulary(fx.formal_seed);
    NGramModel a = train_lm_sampled(fx.pool.target_sentences(), v, 2, 0.1, 50, 13);
    NGramModel b = train_lm_sampled(fx.pool.target_sentences(), v, 2, 0.1, 50, 13);
    NGramModel c = train_lm_sampled(fx.pool.target_sentences(), v, 2, 0.1, 50, 14);
    CHECK(a.sentence_perplexity("w1 w2 w3") == b.sentence_perplexity("w1 w2 w3"));
    CHECK(a.sentence_perplexity("w1 w2 w3") != c.sentence_perplexity("w1 w2 w3"));
}

TEST_CASE("ranking TSV round-trips", "[lm]") {
    synth::TempDir tmp;
    std::vector<PerplexityScore> scores = {{2, 12.5, 10.25, 2.25}, {0, 3.0, 9.0, -6.0}};
    write_ranking_tsv(scores, tmp.file("r.tsv"));
    auto back = read_ranking_tsv(tmp.file("r.tsv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].pair_index == 2);
    CHECK(back[0].pp_in == 12.5);
    CHECK(back[1].diff == -6.0);
}
