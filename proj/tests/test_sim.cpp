#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "pcorr/graph.hpp"
#include "pcorr/sim.hpp"

using namespace pcorr;

namespace {

ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.seed = 5;
    cfg.head_words = 30;
    cfg.tail_entities = 6;
    cfg.snapshot_entities = 6;
    cfg.fresh_train_entities = 6;
    cfg.lm_train_sentences = 200;
    cfg.entity_lm_sentences = 150;
    cfg.confusion_dev_utterances = 50;
    cfg.rescorer_train_utterances = 20;
    cfg.test_head_utterances = 10;
    cfg.test_tail_utterances = 5;
    return cfg;
}

std::set<std::string> word_set(const std::vector<std::string> &v) {
    return std::set<std::string>(v.begin(), v.end());
}

}  // namespace

TEST_CASE("generator streams are deterministic and independent") {
    Rng a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    Rng c(42, 8), d(43, 7), e(42, 7);
    bool stream_differs = false, seed_differs = false;
    for (int i = 0; i < 100; ++i) {
        uint64_t base = e.next();
        if (c.next() != base) stream_differs = true;
        if (d.next() != base) seed_differs = true;
    }
    CHECK(stream_differs);
    CHECK(seed_differs);

    Rng u(9, 0);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    Rng bl(9, 1);
    std::vector<int> buckets(3, 0);
    for (int i = 0; i < 3000; ++i) {
        uint32_t v = bl.below(3);
        REQUIRE(v < 3);
        ++buckets[v];
    }
    for (int count : buckets) {
        CHECK(count > 850);
        CHECK(count < 1150);
    }
}

TEST_CASE("syllable pronunciation rules") {
    CHECK(g2p_table().size() == 90);  // 18 consonants x 5 vowels

    CHECK(g2p_syllable("ha") == std::vector<std::string>({"hh", "aa"}));
    CHECK(g2p_syllable("ju") == std::vector<std::string>({"jh", "uw"}));
    CHECK(g2p_syllable("ke") == std::vector<std::string>({"k", "eh"}));
    CHECK_THROWS_AS(g2p_syllable("xx"), DataError);
    CHECK_THROWS_AS(g2p_syllable("a"), DataError);

    CHECK(g2p_word("haju") == std::vector<std::string>({"hh", "aa", "jh", "uw"}));
    CHECK_THROWS_AS(g2p_word(""), DataError);
    CHECK_THROWS_AS(g2p_word("hab"), DataError);

    // Every rule is two letters mapping to exactly two phones.
    for (const auto &rule : g2p_table()) {
        CHECK(rule.letters.size() == 2);
        CHECK(!rule.consonant_phone.empty());
        CHECK(!rule.vowel_phone.empty());
    }
}

TEST_CASE("channel corruption recovers its configured rates") {
    TrueChannel ch;
    ch.rates = ChannelRates{0.06, 0.04, 0.02};
    for (PhoneId p = 1; p <= 20; ++p) ch.alphabet.push_back(p);

    Rng rng(123, 0);
    CorruptCounts counts;
    const int sequences = 200, length = 50;
    int64_t emitted = 0;
    for (int s = 0; s < sequences; ++s) {
        PhoneSeq clean(length);
        for (auto &p : clean) p = ch.alphabet[rng.below(20)];
        emitted += static_cast<int64_t>(corrupt(ch, clean, rng, &counts).size());
    }
    const double phones = static_cast<double>(sequences) * length;
    CHECK(counts.keeps + counts.subs + counts.dels == sequences * length);
    CHECK(counts.gaps == sequences * (length + 1));
    CHECK(counts.total_pairs() == counts.keeps + counts.subs + counts.dels + counts.inss);
    CHECK(emitted == counts.keeps + counts.subs + counts.inss);

    // 4-sigma Monte-Carlo bands around the configured rates.
    double sub_rate = static_cast<double>(counts.subs) / phones;
    double del_rate = static_cast<double>(counts.dels) / phones;
    double ins_rate = static_cast<double>(counts.inss) / static_cast<double>(counts.gaps);
    CHECK(std::fabs(sub_rate - 0.06) < 4.0 * std::sqrt(0.06 * 0.94 / phones));
    CHECK(std::fabs(del_rate - 0.04) < 4.0 * std::sqrt(0.04 * 0.96 / phones));
    CHECK(std::fabs(ins_rate - 0.02) <
          4.0 * std::sqrt(0.02 * 0.98 / static_cast<double>(counts.gaps)));
}

TEST_CASE("corruption edge behaviors") {
    TrueChannel ch;
    ch.alphabet = {1, 2, 3};
    Rng rng(7, 0);

    // Substitutions never reproduce the original phone.
    ch.rates = ChannelRates{1.0, 0.0, 0.0};
    PhoneSeq clean(300);
    for (auto &p : clean) p = ch.alphabet[rng.below(3)];
    PhoneSeq noisy = corrupt(ch, clean, rng);
    REQUIRE(noisy.size() == clean.size());
    for (size_t i = 0; i < clean.size(); ++i) CHECK(noisy[i] != clean[i]);

    // Certain deletion empties the sequence.
    ch.rates = ChannelRates{0.0, 1.0, 0.0};
    CorruptCounts counts;
    CHECK(corrupt(ch, clean, rng, &counts).empty());
    CHECK(counts.dels == static_cast<int64_t>(clean.size()));

    // Certain insertion fills every gap.
    ch.rates = ChannelRates{0.0, 0.0, 1.0};
    PhoneSeq shorter(clean.begin(), clean.begin() + 10);
    CHECK(corrupt(ch, shorter, rng).size() == 21);

    // Bad configurations are rejected.
    ch.rates = ChannelRates{0.7, 0.4, 0.0};
    CHECK_THROWS_AS(corrupt(ch, shorter, rng), DataError);
    ch.rates = ChannelRates{-0.1, 0.0, 0.0};
    CHECK_THROWS_AS(corrupt(ch, shorter, rng), DataError);
    TrueChannel empty_alpha;
    empty_alpha.rates = ChannelRates{0.1, 0.0, 0.0};
    CHECK_THROWS_AS(corrupt(empty_alpha, shorter, rng), DataError);
}

TEST_CASE("generated scenario keeps its pools apart") {
    ScenarioConfig cfg = small_config();
    Scenario scn = generate_scenario(cfg);

    REQUIRE(scn.head_vocab.size() == static_cast<size_t>(cfg.head_words));
    REQUIRE(scn.tail_entities.size() == static_cast<size_t>(cfg.tail_entities));
    REQUIRE(scn.snapshot_entities.size() == static_cast<size_t>(cfg.snapshot_entities));
    REQUIRE(scn.fresh_train_entities.size() == static_cast<size_t>(cfg.fresh_train_entities));

    auto head = word_set(scn.head_vocab);
    auto snap = word_set(scn.snapshot_entities);
    auto fresh = word_set(scn.fresh_train_entities);
    auto tail = word_set(scn.tail_entities);
    CHECK(head.size() == scn.head_vocab.size());
    auto disjoint = [](const std::set<std::string> &a, const std::set<std::string> &b) {
        for (const auto &w : a)
            if (b.count(w)) return false;
        return true;
    };
    CHECK(disjoint(head, snap));
    CHECK(disjoint(head, fresh));
    CHECK(disjoint(head, tail));
    CHECK(disjoint(snap, fresh));
    CHECK(disjoint(snap, tail));
    CHECK(disjoint(fresh, tail));

    for (const auto &w : scn.head_vocab) CHECK(w.size() == 4);
    for (const auto &w : scn.tail_entities) CHECK(w.size() == 8);

    // Entity syllables double as filler words, and everything is in the
    // lexicon with a rule-derived pronunciation.
    std::set<std::string> fillers = word_set(scn.filler_vocab);
    for (const auto *catalog : {&scn.snapshot_entities, &scn.fresh_train_entities,
                                &scn.tail_entities})
        for (const auto &name : *catalog)
            for (size_t i = 0; i < name.size(); i += 2) CHECK(fillers.count(name.substr(i, 2)));
    for (const auto &pool : {scn.head_vocab, scn.filler_vocab, scn.snapshot_entities,
                             scn.fresh_train_entities, scn.tail_entities})
        for (const auto &w : pool) CHECK(scn.lexicon.contains(w));
    for (const auto &w : scn.filler_vocab) {
        const auto want = g2p_word(w);
        const PhoneSeq &pron = scn.lexicon.pronunciations(w)[0];
        REQUIRE(pron.size() == want.size());
        for (size_t i = 0; i < want.size(); ++i)
            CHECK(scn.lexicon.inventory().label(pron[i]) == want[i]);
    }

    // The stale corpus never mentions fresh or tail entities; the entity
    // corpus may mention any entity plus a carrier word.
    std::set<std::string> stale_allowed = head;
    stale_allowed.insert(fillers.begin(), fillers.end());
    stale_allowed.insert(snap.begin(), snap.end());
    for (const auto &sent : scn.stale_corpus) {
        REQUIRE(!sent.empty());
        for (const auto &w : sent) CHECK(stale_allowed.count(w));
    }
    std::set<std::string> entity_allowed(scn.carriers.begin(), scn.carriers.end());
    entity_allowed.insert(snap.begin(), snap.end());
    entity_allowed.insert(fresh.begin(), fresh.end());
    entity_allowed.insert(tail.begin(), tail.end());
    bool saw_tail = false;
    for (const auto &sent : scn.entity_corpus) {
        for (const auto &w : sent) {
            CHECK(entity_allowed.count(w));
            if (tail.count(w)) saw_tail = true;
        }
    }
    CHECK(saw_tail);

    // The corruption alphabet covers the inventory minus epsilon and <unk>,
    // sorted as the sampler requires.
    CHECK(std::is_sorted(scn.channel.alphabet.begin(), scn.channel.alphabet.end()));
    PhoneId unk = scn.lexicon.inventory().find(kUnkPhoneLabel);
    for (PhoneId p : scn.channel.alphabet) {
        CHECK(p != PhoneInventory::kEps);
        CHECK(p != unk);
    }
    CHECK(scn.channel.alphabet.size() ==
          static_cast<size_t>(scn.lexicon.inventory().size()) - 2);

    // Some head words carry a second pronunciation variant.
    int with_variants = 0;
    for (const auto &w : scn.head_vocab)
        if (scn.lexicon.pronunciations(w).size() > 1) ++with_variants;
    CHECK(with_variants > 0);

    Scenario again = generate_scenario(cfg);
    CHECK(serialize_lexicon(again.lexicon) == serialize_lexicon(scn.lexicon));
    CHECK(again.stale_corpus == scn.stale_corpus);
    CHECK(again.entity_corpus == scn.entity_corpus);
    CHECK(again.tail_entities == scn.tail_entities);
}

TEST_CASE("spoken pronunciations pick real variants") {
    ScenarioConfig cfg = small_config();
    Scenario scn = generate_scenario(cfg);

    std::string multi;
    for (const auto &w : scn.head_vocab)
        if (scn.lexicon.pronunciations(w).size() > 1) {
            multi = w;
            break;
        }
    REQUIRE(!multi.empty());

    const auto &variants = scn.lexicon.pronunciations(multi);
    std::set<size_t> seen;
    Rng rng(3, 0);
    for (int i = 0; i < 50; ++i) {
        PhoneSeq pron = spoken_pronunciation(scn.lexicon, {multi}, rng);
        bool matched = false;
        for (size_t v = 0; v < variants.size(); ++v)
            if (pron == variants[v]) {
                matched = true;
                seen.insert(v);
            }
        CHECK(matched);
    }
    CHECK(seen.size() == variants.size());

    // Two-word sequences concatenate per-word variants.
    const std::string &single = scn.filler_vocab.front();
    PhoneSeq pron = spoken_pronunciation(scn.lexicon, {single, single}, rng);
    const PhoneSeq &base = scn.lexicon.pronunciations(single)[0];
    REQUIRE(pron.size() == 2 * base.size());
    for (size_t i = 0; i < base.size(); ++i) {
        CHECK(pron[i] == base[i]);
        CHECK(pron[base.size() + i] == base[i]);
    }
}

TEST_CASE("config serialization round trip and hash") {
    ScenarioConfig cfg;
    std::string text = serialize_config(cfg);
    ScenarioConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);

    ScenarioConfig tweaked;
    tweaked.seed = 99;
    tweaked.rates.ins = 0.05;
    tweaked.decode.m = 4;
    tweaked.train.epochs = 3;
    tweaked.test_tail_utterances = 7;
    ScenarioConfig t2 = parse_config(serialize_config(tweaked));
    CHECK(t2.seed == 99);
    CHECK(t2.rates.ins == 0.05);
    CHECK(t2.decode.m == 4);
    CHECK(t2.train.epochs == 3);
    CHECK(t2.test_tail_utterances == 7);
    CHECK(serialize_config(t2) == serialize_config(tweaked));

    std::string h = config_hash(cfg);
    CHECK(h.size() == 16);
    for (char c : h) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
    CHECK(config_hash(cfg) == h);
    CHECK(config_hash(tweaked) != h);

    // Partial configs inherit defaults.
    ScenarioConfig partial = parse_config("{\"seed\": 3}");
    CHECK(partial.seed == 3);
    CHECK(partial.head_words == cfg.head_words);
    CHECK_THROWS_AS(parse_config("nope"), ParseError);
}

TEST_CASE("config validation rejects broken settings") {
    auto broken = [](const std::function<void(ScenarioConfig &)> &mutate) {
        ScenarioConfig cfg;
        mutate(cfg);
        return cfg;
    };
    CHECK_THROWS_AS(broken([](ScenarioConfig &c) { c.head_words = 4; }).validate(), DataError);
    CHECK_THROWS_AS(broken([](ScenarioConfig &c) { c.tail_entities = 0; }).validate(), DataError);
    CHECK_THROWS_AS(broken([](ScenarioConfig &c) { c.rates.sub = 0.6; c.rates.del = 0.5; }).validate(),
                    DataError);
    CHECK_THROWS_AS(broken([](ScenarioConfig &c) { c.rates.ins = -0.01; }).validate(), DataError);
    CHECK_THROWS_AS(broken([](ScenarioConfig &c) { c.lm_order = 6; }).validate(), DataError);
    CHECK_THROWS_AS(broken([](ScenarioConfig &c) { c.n = c.asr_nbest + 1; }).validate(), DataError);
    CHECK_THROWS_AS(broken([](ScenarioConfig &c) { c.decode.m = 0; }).validate(), DataError);
    CHECK_THROWS_AS(broken([](ScenarioConfig &c) { c.train.learning_rate = 0.0; }).validate(),
                    DataError);
    ScenarioConfig fine;
    CHECK_NOTHROW(fine.validate());
}

TEST_CASE("stale recognition yields channel-scored hypotheses") {
    Lexicon lex = parse_lexicon(
        "pa\ta\n"
        "po\to\n"
        "papa\ta a\n"
        "mix\ta o\n");
    NGramLM lm = train_ngram({{"pa"}, {"po"}, {"papa"}, {"mix"}, {"pa", "po"}}, 2);
    GraphOptions gopt;
    gopt.order = 1;
    DecodingGraph graph = build_graph(lex, lm, gopt);

    const PhoneInventory &inv = lex.inventory();
    std::vector<std::string> labels;
    for (PhoneId p = 1; p < static_cast<PhoneId>(inv.size()); ++p) labels.push_back(inv.label(p));
    const int n = static_cast<int>(labels.size());
    std::vector<std::vector<double>> em(n + 1, std::vector<double>(n + 1, 0.0));
    for (int o = 1; o <= n; ++o) em[0][o] = 1.0 / n;
    for (int r = 1; r <= n; ++r) {
        em[r][0] = 0.1;
        for (int o = 1; o <= n; ++o) em[r][o] = o == r ? 0.7 : 0.2 / (n - 1);
    }
    ConfusionModel cm(labels, em, 0.1);

    DecodeOptions opt;
    opt.m = 5;
    PhoneSeq obs = inv.encode({"a", "a"});
    std::vector<Hypothesis> nbest = simulate_asr(graph, cm, lex, obs, opt);
    REQUIRE(!nbest.empty());
    for (const auto &h : nbest) {
        CHECK(h.source == Source::kAsr);
        PhoneSeq pron = pronounce(lex, h.words, VariantPolicy::kMinChannelCost, &cm, &obs);
        CHECK(h.acoustic_likelihood == channel_logprob(cm, obs, pron));
    }
}

TEST_CASE("index-parallel loops cover every slot once") {
    const int n = 37;
    std::vector<int> hits(n, 0);
    parallel_for(n, 4, [&](int i) { ++hits[i]; });
    for (int h : hits) CHECK(h == 1);

    std::vector<int> serial(n), threaded(n);
    parallel_for(n, 1, [&](int i) { serial[i] = i * i; });
    parallel_for(n, 3, [&](int i) { threaded[i] = i * i; });
    CHECK(serial == threaded);

    bool called = false;
    parallel_for(0, 4, [&](int) { called = true; });
    CHECK(!called);
    parallel_for(2, 8, [&](int) {});
}

TEST_CASE("benchmark reports serialize without the wall clock") {
    BenchmarkReport a;
    a.hash = "00deadbeef001234";
    a.channel = {0.02, 0.019, 0.9, 0.89};
    a.head.utterances = 240;
    a.head.baseline_wer = 0.1;
    a.head.corrected_wer = 0.09;
    a.tail.utterances = 60;
    a.tail.baseline_wer = 0.9;
    a.tail.corrected_wer = 0.2;
    a.tail.rel_reduction = (0.9 - 0.2) / 0.9;
    AblationResult ab;
    ab.name = "no_lm";
    ab.masked_groups = {"interp_lm", "component_lm"};
    ab.head_corrected_wer = 0.12;
    ab.tail_corrected_wer = 0.5;
    a.ablations.push_back(ab);
    a.train_records = 360;
    a.final_train_loss = 0.07;
    a.runtime_seconds = 1.25;

    BenchmarkReport b = a;
    b.runtime_seconds = 99.0;
    CHECK(serialize_report(a) == serialize_report(b));

    b.tail.corrected_wer = 0.21;
    CHECK(serialize_report(a) != serialize_report(b));

    std::string table = format_report_table(a);
    CHECK(table.find("tail") != std::string::npos);
    CHECK(table.find("no_lm") != std::string::npos);
    CHECK(table == format_report_table(a));
}
