#include "doctest.h"

#include <cmath>
#include <vector>

#include "pcorr/ngram_lm.hpp"
#include "pcorr/sim.hpp"

using namespace pcorr;

namespace {

double p10(double logp) { return std::pow(10.0, logp); }

std::vector<WordSeq> random_corpus(Rng &rng, int sentences, int max_len,
                                   const std::vector<std::string> &vocab) {
    std::vector<WordSeq> out;
    for (int i = 0; i < sentences; ++i) {
        WordSeq s(1 + rng.below(static_cast<uint32_t>(max_len)));
        for (auto &w : s) w = vocab[rng.below(static_cast<uint32_t>(vocab.size()))];
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("witten-bell unigram matches hand-computed fractions") {
    // 5 sentences, 11 'a' tokens: events a=11, </s>=5, so N=16, T=2 seen
    // types, uniform base 1/(T+1)=1/3 over {a, </s>, <unk>}.
    // P(w) = (c(w) + T/3) / (N + T).
    std::vector<WordSeq> corpus{{"a", "a", "a"}, {"a", "a"}, {"a", "a"}, {"a", "a"}, {"a", "a"}};
    NGramLM lm = train_ngram(corpus, 1);
    CHECK(p10(lm.cond_logprob("a", {})) == doctest::Approx(35.0 / 54).epsilon(1e-12));
    CHECK(p10(lm.cond_logprob(NGramLM::kSentEnd, {})) ==
          doctest::Approx(17.0 / 54).epsilon(1e-12));
    CHECK(p10(lm.cond_logprob("never-seen", {})) == doctest::Approx(2.0 / 54).epsilon(1e-12));
    CHECK(p10(lm.cond_logprob(NGramLM::kUnk, {})) == doctest::Approx(2.0 / 54).epsilon(1e-12));
    // The three probabilities cover the whole event space.
    CHECK(lm.context_probability_mass({}) == doctest::Approx(1.0).epsilon(1e-12));
    // <s> carries the conventional placeholder score.
    CHECK(lm.cond_logprob(NGramLM::kSentBegin, {}) == doctest::Approx(-99.0));
}

TEST_CASE("witten-bell bigram matches hand-computed fractions") {
    // Corpus "a b", "a a". Unigram events: a=3, b=1, </s>=2 (N=6, T=3,
    // base 1/4): P1(a)=5/12, P1(b)=7/36, P1(</s>)=11/36, P1(<unk>)=1/12.
    std::vector<WordSeq> corpus{{"a", "b"}, {"a", "a"}};
    NGramLM lm = train_ngram(corpus, 2);

    CHECK(p10(lm.cond_logprob("a", {})) == doctest::Approx(5.0 / 12).epsilon(1e-12));
    CHECK(p10(lm.cond_logprob("b", {})) == doctest::Approx(7.0 / 36).epsilon(1e-12));

    // Context <s>: c=2, T=1: P(a|<s>) = (2 + P1(a)) / 3 = 29/36.
    CHECK(p10(lm.cond_logprob("a", {NGramLM::kSentBegin})) ==
          doctest::Approx(29.0 / 36).epsilon(1e-12));
    // Context a: c=3, T=3: P(b|a) = (1 + 3 P1(b)) / 6 = 19/72, P(a|a) = 3/8,
    // P(</s>|a) = 23/72.
    CHECK(p10(lm.cond_logprob("b", {"a"})) == doctest::Approx(19.0 / 72).epsilon(1e-12));
    CHECK(p10(lm.cond_logprob("a", {"a"})) == doctest::Approx(3.0 / 8).epsilon(1e-12));
    CHECK(p10(lm.cond_logprob(NGramLM::kSentEnd, {"a"})) ==
          doctest::Approx(23.0 / 72).epsilon(1e-12));
    // Unseen bigram (b, b) backs off: bow(b) * P1(b) = (1/2)(7/36) = 7/72.
    CHECK(p10(lm.cond_logprob("b", {"b"})) == doctest::Approx(7.0 / 72).epsilon(1e-12));
    CHECK(p10(lm.cond_logprob(NGramLM::kUnk, {"a"})) ==
          doctest::Approx(1.0 / 24).epsilon(1e-12));

    CHECK(lm.context_probability_mass({"a"}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lm.context_probability_mass({"b"}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lm.context_probability_mass({NGramLM::kSentBegin}) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // Sequence score composes the conditionals.
    double want = std::log10(29.0 / 36) + std::log10(19.0 / 72) + std::log10(47.0 / 72);
    CHECK(lm.sequence_logprob({"a", "b"}) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("conditional mass is normalized on a random trigram model") {
    Rng rng(31, 0);
    std::vector<std::string> vocab{"red", "green", "blue", "play", "stop", "song"};
    NGramLM lm = train_ngram(random_corpus(rng, 120, 6, vocab), 3);
    CHECK(lm.context_probability_mass({}) == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto &ctx : lm.listed_contexts(2))
        CHECK(lm.context_probability_mass(ctx) == doctest::Approx(1.0).epsilon(1e-9));
    // Unlisted contexts also normalize (pure backoff).
    CHECK(lm.context_probability_mass({"red", "red"}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("order_cap evaluates a lower-order view of the model") {
    std::vector<WordSeq> corpus{{"a", "b"}, {"a", "a"}, {"b", "a"}};
    NGramLM lm = train_ngram(corpus, 3);
    NGramLM uni = train_ngram(corpus, 1);
    NGramLM bi = train_ngram(corpus, 2);
    for (const char *w : {"a", "b"}) {
        CHECK(lm.cond_logprob(w, {"b", "a"}, 1) ==
              doctest::Approx(uni.cond_logprob(w, {})).epsilon(1e-12));
        CHECK(lm.cond_logprob(w, {"b", "a"}, 2) ==
              doctest::Approx(bi.cond_logprob(w, {"a"})).epsilon(1e-12));
    }
    CHECK(lm.sequence_logprob({"a", "b", "a"}, 1) ==
          doctest::Approx(uni.sequence_logprob({"a", "b", "a"})).epsilon(1e-12));
}

TEST_CASE("arpa serialization round-trips byte for byte") {
    Rng rng(77, 2);
    std::vector<std::string> vocab{"on", "off", "light", "kitchen"};
    NGramLM lm = train_ngram(random_corpus(rng, 60, 5, vocab), 3);
    std::string arpa = lm.to_arpa();
    NGramLM back = NGramLM::from_arpa(arpa);
    CHECK(back.to_arpa() == arpa);
    CHECK(back.order() == 3);
    // Scores survive the round trip.
    WordSeq probe{"light", "on"};
    CHECK(back.sequence_logprob(probe) == doctest::Approx(lm.sequence_logprob(probe)).epsilon(1e-12));
    CHECK(arpa.find("-99\t<s>") != std::string::npos);
}

TEST_CASE("arpa parser rejects malformed input") {
    CHECK_THROWS_AS(NGramLM::from_arpa("not an arpa file"), ParseError);
    CHECK_THROWS_AS(NGramLM::from_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n"), ParseError);
    CHECK_THROWS_AS(NGramLM::from_arpa(""), ParseError);
}

TEST_CASE("listed_contexts and listed_suffix agree with the tables") {
    std::vector<WordSeq> corpus{{"a", "b"}, {"a", "a"}};
    NGramLM lm = train_ngram(corpus, 2);
    auto ctxs = lm.listed_contexts(1);
    // Empty context plus every unigram except </s>.
    std::vector<std::vector<std::string>> want{
        {}, {NGramLM::kSentBegin}, {NGramLM::kUnk}, {"a"}, {"b"}};
    CHECK(ctxs == want);

    CHECK(lm.listed_suffix({"x", "a"}, 1) == std::vector<std::string>{"a"});
    CHECK(lm.listed_suffix({"a", "b"}, 1) == std::vector<std::string>{"b"});
    CHECK(lm.listed_suffix({"zzz"}, 1).empty());
}

TEST_CASE("vocabulary and membership") {
    NGramLM lm = train_ngram({{"Play", "Jazz"}}, 2);
    CHECK(lm.has_word("play"));
    CHECK(lm.has_word("PLAY"));
    CHECK(lm.has_word("jazz"));
    CHECK(!lm.has_word("rock"));
    auto v = lm.vocab();
    CHECK(std::find(v.begin(), v.end(), "play") != v.end());
    CHECK(std::find(v.begin(), v.end(), NGramLM::kUnk) != v.end());
}

TEST_CASE("em weights move toward the better component, likelihood never drops") {
    NGramLM stale = train_ngram({{"play", "music"}, {"stop", "music"}}, 2);
    NGramLM fresh = train_ngram({{"suye", "mopa"}, {"suye", "diro"}}, 2);
    std::vector<const NGramLM *> comps{&stale, &fresh};
    std::vector<WordSeq> hyps{{"suye", "mopa"}, {"suye", "diro"}, {"suye", "mopa"}};

    std::vector<double> trace;
    InterpolationWeights w = em_interpolation_weights(comps, hyps, 25, &trace);
    REQUIRE(w.values.size() == 2);
    CHECK(w.values[0] + w.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.values[1] > 0.9);  // fresh explains the hypotheses
    REQUIRE(trace.size() >= 2);
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-9);
}

TEST_CASE("one em iteration equals the closed-form posterior") {
    NGramLM a = train_ngram({{"x"}, {"x", "x"}}, 1);
    NGramLM b = train_ngram({{"y"}, {"y", "y"}}, 1);
    std::vector<const NGramLM *> comps{&a, &b};
    std::vector<WordSeq> hyps{{"x"}};
    InterpolationWeights w = em_interpolation_weights(comps, hyps, 1);
    double pa = std::pow(10.0, a.sequence_logprob({"x"}));
    double pb = std::pow(10.0, b.sequence_logprob({"x"}));
    CHECK(w.values[0] == doctest::Approx(pa / (pa + pb)).epsilon(1e-12));
}

TEST_CASE("interpolated_logprob is the weighted mixture in probability space") {
    NGramLM a = train_ngram({{"x", "y"}}, 1);
    NGramLM b = train_ngram({{"y", "y"}}, 1);
    std::vector<const NGramLM *> comps{&a, &b};
    InterpolationWeights w{{0.25, 0.75}};
    WordSeq probe{"y"};
    double want = std::log10(0.25 * std::pow(10.0, a.sequence_logprob(probe)) +
                             0.75 * std::pow(10.0, b.sequence_logprob(probe)));
    CHECK(interpolated_logprob(comps, w, probe) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("interpolation weight validation") {
    CHECK_THROWS_AS((InterpolationWeights{{0.5, 0.6}}.validate()), DataError);
    CHECK_THROWS_AS((InterpolationWeights{{-0.1, 1.1}}.validate()), DataError);
    CHECK_NOTHROW((InterpolationWeights{{0.5, 0.5}}.validate()));
}
