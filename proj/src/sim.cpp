#include "pcorr/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "pcorr/phone_align.hpp"

namespace pcorr {

namespace {

uint64_t splitmix64(uint64_t &state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(uint64_t seed, uint64_t stream) {
    uint64_t s = seed;
    uint64_t a = splitmix64(s);
    s = stream ^ 0x6a09e667f3bcc909ull;
    uint64_t b = splitmix64(s);
    state_ = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
}

uint64_t Rng::next() { return splitmix64(state_); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

uint32_t Rng::below(uint32_t n) { return n <= 1 ? 0 : static_cast<uint32_t>(next() % n); }

namespace {

constexpr const char *kConsonants = "bdfghjklmnprstvwyz";
std::string consonant_phone(char c) {
    if (c == 'h') return "hh";
    if (c == 'j') return "jh";
    return std::string(1, c);
}
std::string vowel_phone(char v) {
    switch (v) {
        case 'a': return "aa";
        case 'e': return "eh";
        case 'i': return "iy";
        case 'o': return "ow";
        default: return "uw";
    }
}

}  // namespace

const std::vector<SyllableRule> &g2p_table() {
    static const std::vector<SyllableRule> table = [] {
        std::vector<SyllableRule> t;
        for (const char *c = kConsonants; *c; ++c)
            for (char v : {'a', 'e', 'i', 'o', 'u'})
                t.push_back({std::string{*c, v}, consonant_phone(*c), vowel_phone(v)});
        return t;
    }();
    return table;
}

std::vector<std::string> g2p_syllable(const std::string &syllable) {
    for (const auto &rule : g2p_table())
        if (rule.letters == syllable) return {rule.consonant_phone, rule.vowel_phone};
    throw DataError("unlisted syllable: " + syllable);
}

std::vector<std::string> g2p_word(const std::string &word) {
    if (word.empty() || word.size() % 2 != 0)
        throw DataError("word is not a chain of two-letter syllables: " + word);
    std::vector<std::string> phones;
    for (size_t i = 0; i < word.size(); i += 2) {
        auto syl = g2p_syllable(word.substr(i, 2));
        phones.insert(phones.end(), syl.begin(), syl.end());
    }
    return phones;
}

PhoneSeq corrupt(const TrueChannel &channel, const PhoneSeq &phones, Rng &rng,
                 CorruptCounts *counts) {
    const auto &rates = channel.rates;
    const auto &alphabet = channel.alphabet;
    if (rates.sub < 0 || rates.del < 0 || rates.ins < 0 || rates.sub + rates.del > 1.0 ||
        rates.ins > 1.0)
        throw DataError("invalid channel rates");
    if ((rates.sub > 0 || rates.ins > 0) && alphabet.empty())
        throw DataError("channel alphabet is empty");
    PhoneSeq out;
    out.reserve(phones.size() + 2);
    auto maybe_insert = [&] {
        if (counts != nullptr) ++counts->gaps;
        if (rates.ins > 0 && rng.uniform() < rates.ins) {
            out.push_back(alphabet[rng.below(static_cast<uint32_t>(alphabet.size()))]);
            if (counts != nullptr) ++counts->inss;
        }
    };
    for (PhoneId p : phones) {
        maybe_insert();
        double u = rng.uniform();
        if (u < rates.sub) {
            // uniform over the alphabet with p excluded
            auto it = std::lower_bound(alphabet.begin(), alphabet.end(), p);
            uint32_t n = static_cast<uint32_t>(alphabet.size());
            if (it != alphabet.end() && *it == p) {
                uint32_t self = static_cast<uint32_t>(it - alphabet.begin());
                uint32_t j = rng.below(n - 1);
                out.push_back(alphabet[j >= self ? j + 1 : j]);
            } else {
                out.push_back(alphabet[rng.below(n)]);
            }
            if (counts != nullptr) ++counts->subs;
        } else if (u < rates.sub + rates.del) {
            if (counts != nullptr) ++counts->dels;
        } else {
            out.push_back(p);
            if (counts != nullptr) ++counts->keeps;
        }
    }
    maybe_insert();
    return out;
}

void ScenarioConfig::validate() const {
    auto rate_ok = [](double r) { return r >= 0.0 && r < 1.0; };
    if (!rate_ok(rates.sub) || !rate_ok(rates.del) || !rate_ok(rates.ins) ||
        rates.sub + rates.del >= 1.0)
        throw DataError("channel rates must lie in [0, 1) with sub + del < 1");
    if (head_words < 5 || tail_entities < 1 || snapshot_entities < 1 || fresh_train_entities < 0)
        throw DataError("vocabulary sizes too small");
    if (zipf_exponent < 0.0) throw DataError("zipf exponent must be nonnegative");
    if (lm_train_sentences < 1 || entity_lm_sentences < 1 || confusion_dev_utterances < 1 ||
        rescorer_train_utterances < 1 || test_head_utterances < 1 || test_tail_utterances < 1)
        throw DataError("corpus sizes must be at least 1");
    if (lm_order < 1 || lm_order > 5 || graph_order < 1 || graph_order > 5)
        throw DataError("model orders must lie in 1..5");
    if (asr_nbest < 1 || n < 1 || n > asr_nbest) throw DataError("need 1 <= n <= asr_nbest");
    if (decode.beam < 1 || decode.m < 1 || decode.max_consecutive_deletions < 0 ||
        decode.max_active < 1 || !(decode.score_window > 0.0))
        throw DataError("invalid decoder options");
    if (train.batch_size < 1 || train.epochs < 0 || train.learning_rate <= 0.0)
        throw DataError("invalid trainer options");
}

std::string serialize_config(const ScenarioConfig &cfg) {
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    j["head_words"] = cfg.head_words;
    j["tail_entities"] = cfg.tail_entities;
    j["snapshot_entities"] = cfg.snapshot_entities;
    j["fresh_train_entities"] = cfg.fresh_train_entities;
    j["zipf_exponent"] = fmt_sig(cfg.zipf_exponent, 12);
    j["rates"] = {{"sub", fmt_sig(cfg.rates.sub, 12)},
                  {"del", fmt_sig(cfg.rates.del, 12)},
                  {"ins", fmt_sig(cfg.rates.ins, 12)}};
    j["lm_train_sentences"] = cfg.lm_train_sentences;
    j["entity_lm_sentences"] = cfg.entity_lm_sentences;
    j["confusion_dev_utterances"] = cfg.confusion_dev_utterances;
    j["rescorer_train_utterances"] = cfg.rescorer_train_utterances;
    j["test_head_utterances"] = cfg.test_head_utterances;
    j["test_tail_utterances"] = cfg.test_tail_utterances;
    j["lm_order"] = cfg.lm_order;
    j["graph_order"] = cfg.graph_order;
    j["asr_nbest"] = cfg.asr_nbest;
    j["n"] = cfg.n;
    j["decode"] = {{"beam", cfg.decode.beam},
                   {"m", cfg.decode.m},
                   {"max_consecutive_deletions", cfg.decode.max_consecutive_deletions},
                   {"max_active", cfg.decode.max_active},
                   {"score_window", fmt_sig(cfg.decode.score_window, 12)}};
    j["train"] = {{"learning_rate", fmt_sig(cfg.train.learning_rate, 12)},
                  {"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"seed", cfg.train.seed},
                  {"l2", fmt_sig(cfg.train.l2, 12)}};
    return j.dump(2) + "\n";
}

ScenarioConfig parse_config(const std::string &text) {
    ScenarioConfig cfg;
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.head_words = j.value("head_words", cfg.head_words);
        cfg.tail_entities = j.value("tail_entities", cfg.tail_entities);
        cfg.snapshot_entities = j.value("snapshot_entities", cfg.snapshot_entities);
        cfg.fresh_train_entities = j.value("fresh_train_entities", cfg.fresh_train_entities);
        if (j.contains("zipf_exponent"))
            cfg.zipf_exponent = std::stod(j["zipf_exponent"].get<std::string>());
        if (j.contains("rates")) {
            const auto &r = j["rates"];
            if (r.contains("sub")) cfg.rates.sub = std::stod(r["sub"].get<std::string>());
            if (r.contains("del")) cfg.rates.del = std::stod(r["del"].get<std::string>());
            if (r.contains("ins")) cfg.rates.ins = std::stod(r["ins"].get<std::string>());
        }
        cfg.lm_train_sentences = j.value("lm_train_sentences", cfg.lm_train_sentences);
        cfg.entity_lm_sentences = j.value("entity_lm_sentences", cfg.entity_lm_sentences);
        cfg.confusion_dev_utterances =
            j.value("confusion_dev_utterances", cfg.confusion_dev_utterances);
        cfg.rescorer_train_utterances =
            j.value("rescorer_train_utterances", cfg.rescorer_train_utterances);
        cfg.test_head_utterances = j.value("test_head_utterances", cfg.test_head_utterances);
        cfg.test_tail_utterances = j.value("test_tail_utterances", cfg.test_tail_utterances);
        cfg.lm_order = j.value("lm_order", cfg.lm_order);
        cfg.graph_order = j.value("graph_order", cfg.graph_order);
        cfg.asr_nbest = j.value("asr_nbest", cfg.asr_nbest);
        cfg.n = j.value("n", cfg.n);
        if (j.contains("decode")) {
            const auto &d = j["decode"];
            cfg.decode.beam = d.value("beam", cfg.decode.beam);
            cfg.decode.m = d.value("m", cfg.decode.m);
            cfg.decode.max_consecutive_deletions =
                d.value("max_consecutive_deletions", cfg.decode.max_consecutive_deletions);
            cfg.decode.max_active = d.value("max_active", cfg.decode.max_active);
            if (d.contains("score_window"))
                cfg.decode.score_window = std::stod(d["score_window"].get<std::string>());
        }
        if (j.contains("train")) {
            const auto &t = j["train"];
            if (t.contains("learning_rate"))
                cfg.train.learning_rate = std::stod(t["learning_rate"].get<std::string>());
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            cfg.train.seed = t.value("seed", cfg.train.seed);
            if (t.contains("l2")) cfg.train.l2 = std::stod(t["l2"].get<std::string>());
        }
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("scenario config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string config_hash(const ScenarioConfig &cfg) {
    const std::string bytes = serialize_config(cfg);
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

namespace {

constexpr uint64_t kStreamVocab = 0;
constexpr uint64_t kStreamStaleCorpus = 1;
constexpr uint64_t kStreamEntityCorpus = 2;
constexpr uint64_t kStreamDev = 3;
constexpr uint64_t kStreamTrain = 4;
constexpr uint64_t kStreamTestHead = 5;
constexpr uint64_t kStreamTestTail = 6;

uint64_t stream_id(uint64_t purpose, uint64_t index) { return (purpose << 32) | index; }

const std::vector<std::string> &vowel_phones() {
    static const std::vector<std::string> v = {"aa", "eh", "iy", "ow", "uw"};
    return v;
}

// Zipf-weighted index sampler over 0..n-1 with rank = index.
class ZipfSampler {
 public:
    ZipfSampler(int n, double exponent) : cum_(n) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            total += std::pow(static_cast<double>(i + 1), -exponent);
            cum_[i] = total;
        }
    }
    int draw(Rng &rng) const {
        double u = rng.uniform() * cum_.back();
        return static_cast<int>(std::lower_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
    }

 private:
    std::vector<double> cum_;
};

struct QuerySamplers {
    const Scenario *scn;
    ZipfSampler head_zipf;
    double filler_rate = 0.08;

    WordSeq general(Rng &rng) const {
        int len = 1 + static_cast<int>(rng.below(3));
        WordSeq q;
        for (int i = 0; i < len; ++i) {
            if (!scn->filler_vocab.empty() && rng.uniform() < filler_rate)
                q.push_back(scn->filler_vocab[rng.below(
                    static_cast<uint32_t>(scn->filler_vocab.size()))]);
            else
                q.push_back(scn->head_vocab[head_zipf.draw(rng)]);
        }
        return q;
    }

    WordSeq entity(const std::vector<std::string> &catalog, Rng &rng) const {
        const std::string &name = catalog[rng.below(static_cast<uint32_t>(catalog.size()))];
        if (rng.uniform() < 0.5) {
            const std::string &carrier =
                scn->carriers[rng.below(static_cast<uint32_t>(scn->carriers.size()))];
            return {carrier, name};
        }
        return {name};
    }
};

}  // namespace

Scenario generate_scenario(const ScenarioConfig &cfg) {
    cfg.validate();
    Scenario scn;
    scn.channel.rates = cfg.rates;

    std::vector<std::string> syllables;
    syllables.reserve(g2p_table().size());
    for (const auto &rule : g2p_table()) syllables.push_back(rule.letters);

    Rng vr(cfg.seed, stream_id(kStreamVocab, 0));
    auto make_word = [&](int syllable_count) {
        std::string w;
        for (int s = 0; s < syllable_count; ++s)
            w += syllables[vr.below(static_cast<uint32_t>(syllables.size()))];
        return w;
    };
    std::unordered_set<std::string> used;
    auto draw_distinct = [&](int syllable_count) {
        for (;;) {
            std::string w = make_word(syllable_count);
            if (used.insert(w).second) return w;
        }
    };

    // Entity names are four syllables: long enough that channel noise on a
    // general query almost never turns it into a credible entity reading.
    for (int i = 0; i < cfg.head_words; ++i) scn.head_vocab.push_back(draw_distinct(2));
    for (int i = 0; i < cfg.snapshot_entities; ++i)
        scn.snapshot_entities.push_back(draw_distinct(4));
    for (int i = 0; i < cfg.fresh_train_entities; ++i)
        scn.fresh_train_entities.push_back(draw_distinct(4));
    for (int i = 0; i < cfg.tail_entities; ++i) scn.tail_entities.push_back(draw_distinct(4));

    // Every entity syllable is also a standalone filler word, so a system
    // that has never seen an entity can still transcribe its phones.
    std::set<std::string> filler_set;
    for (const auto *catalog : {&scn.snapshot_entities, &scn.fresh_train_entities, &scn.tail_entities})
        for (const auto &name : *catalog)
            for (size_t i = 0; i < name.size(); i += 2) filler_set.insert(name.substr(i, 2));
    scn.filler_vocab.assign(filler_set.begin(), filler_set.end());

    scn.carriers.assign(scn.head_vocab.begin(),
                        scn.head_vocab.begin() + std::min<size_t>(3, scn.head_vocab.size()));

    Lexicon built;
    auto add_word = [&](const std::string &word) {
        PhoneSeq pron;
        for (const auto &label : g2p_word(word)) pron.push_back(built.inventory().add(label));
        built.add_entry(word, pron);
    };
    for (const auto &w : scn.head_vocab) add_word(w);
    for (const auto &w : scn.filler_vocab) add_word(w);
    for (const auto &w : scn.snapshot_entities) add_word(w);
    for (const auto &w : scn.fresh_train_entities) add_word(w);
    for (const auto &w : scn.tail_entities) add_word(w);

    // A slice of head words gets a second pronunciation variant with the
    // final vowel shifted, exercising variant handling end to end.
    const auto &vowels = vowel_phones();
    for (size_t i = 3; i < scn.head_vocab.size(); i += 7) {
        const std::string &word = scn.head_vocab[i];
        PhoneSeq pron = built.pronunciations(word)[0];
        const std::string last = built.inventory().label(pron.back());
        auto it = std::find(vowels.begin(), vowels.end(), last);
        const std::string &shifted = vowels[(it - vowels.begin() + 1) % vowels.size()];
        pron.back() = built.inventory().add(shifted);
        built.add_entry(word, pron);
    }

    // Round-trip through the text format: canonical ordering plus the
    // reserved <unk> phone registration.
    scn.lexicon = parse_lexicon(serialize_lexicon(built));

    const PhoneId unk = scn.lexicon.inventory().find(kUnkPhoneLabel);
    for (PhoneId p = 1; p < scn.lexicon.inventory().size(); ++p)
        if (p != unk) scn.channel.alphabet.push_back(p);

    QuerySamplers samplers{&scn, ZipfSampler(cfg.head_words, cfg.zipf_exponent)};
    std::vector<std::string> snapshot = scn.snapshot_entities;

    scn.stale_corpus.reserve(cfg.lm_train_sentences);
    for (int i = 0; i < cfg.lm_train_sentences; ++i) {
        Rng rng(cfg.seed, stream_id(kStreamStaleCorpus, static_cast<uint64_t>(i)));
        if (rng.uniform() < 0.8)
            scn.stale_corpus.push_back(samplers.general(rng));
        else
            scn.stale_corpus.push_back(samplers.entity(snapshot, rng));
    }

    std::vector<std::string> all_entities = scn.snapshot_entities;
    all_entities.insert(all_entities.end(), scn.fresh_train_entities.begin(),
                        scn.fresh_train_entities.end());
    all_entities.insert(all_entities.end(), scn.tail_entities.begin(), scn.tail_entities.end());
    scn.entity_corpus.reserve(cfg.entity_lm_sentences);
    for (int i = 0; i < cfg.entity_lm_sentences; ++i) {
        Rng rng(cfg.seed, stream_id(kStreamEntityCorpus, static_cast<uint64_t>(i)));
        scn.entity_corpus.push_back(samplers.entity(all_entities, rng));
    }
    return scn;
}

PhoneSeq spoken_pronunciation(const Lexicon &lex, const WordSeq &words, Rng &rng) {
    PhoneSeq out;
    for (const auto &word : words) {
        const auto &variants = lex.pronunciations(word);
        const PhoneSeq &v =
            variants.size() > 1 ? variants[rng.below(static_cast<uint32_t>(variants.size()))]
                                : variants[0];
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

std::vector<Hypothesis> simulate_asr(const DecodingGraph &stale, const ConfusionModel &cm,
                                     const Lexicon &lex, const PhoneSeq &obs,
                                     const DecodeOptions &opt) {
    std::vector<Alternative> alts = decode_mbest(stale, cm, obs, opt);
    std::vector<Hypothesis> nbest;
    nbest.reserve(alts.size());
    for (const auto &alt : alts) {
        Hypothesis h;
        h.words = alt.words;
        h.source = Source::kAsr;
        PhoneSeq pron = pronounce(lex, alt.words, VariantPolicy::kMinChannelCost, &cm, &obs);
        h.acoustic_likelihood = channel_logprob(cm, obs, pron);
        nbest.push_back(std::move(h));
    }
    return nbest;
}

void parallel_for(int n, int jobs, const std::function<void(int)> &f) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next(0);
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            f(i);
        }
    };
    std::vector<std::thread> pool;
    const int t = std::min(jobs, n);
    pool.reserve(t);
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto &th : pool) th.join();
}

namespace {

template <typename F>
auto stage(const char *name, F &&fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const DataError &e) {
        throw DataError(std::string(name) + ": " + e.what());
    } catch (const std::exception &e) {
        throw DataError(std::string(name) + ": " + e.what());
    }
}

struct UtteranceKind {
    // general queries with probability p_general, else an entity query over
    // the given catalog
    double p_general = 1.0;
    const std::vector<std::string> *catalog = nullptr;
};

std::vector<UtteranceRecord> make_utterances(const Scenario &scn, const ScenarioConfig &cfg,
                                             uint64_t purpose, const std::string &prefix,
                                             int count, const UtteranceKind &kind,
                                             const QuerySamplers &samplers,
                                             std::vector<std::pair<PhoneSeq, PhoneSeq>> *dev_pairs,
                                             CorruptCounts *counts) {
    std::vector<UtteranceRecord> recs;
    recs.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(cfg.seed, stream_id(purpose, static_cast<uint64_t>(i)));
        WordSeq ref;
        if (kind.catalog == nullptr || rng.uniform() < kind.p_general)
            ref = samplers.general(rng);
        else
            ref = samplers.entity(*kind.catalog, rng);
        PhoneSeq pron = spoken_pronunciation(scn.lexicon, ref, rng);
        PhoneSeq obs = corrupt(scn.channel, pron, rng, counts);
        if (dev_pairs != nullptr) dev_pairs->emplace_back(obs, pron);
        UtteranceRecord rec;
        rec.id = prefix + "-" + std::to_string(i);
        rec.obs = std::move(obs);
        rec.reference = std::move(ref);
        rec.has_reference = true;
        recs.push_back(std::move(rec));
    }
    return recs;
}

// Fills asr_nbest and kbest for every record; records whose stale decode
// came back empty are removed and counted.
int fill_hypotheses(std::vector<UtteranceRecord> &recs, const DecodingGraph &stale,
                    const DecodingGraph &fresh, const ConfusionModel &cm, const Lexicon &lex,
                    const ScenarioConfig &cfg, int jobs) {
    DecodeOptions asr_opt = cfg.decode;
    asr_opt.m = cfg.asr_nbest;
    std::vector<char> dead(recs.size(), 0);
    parallel_for(static_cast<int>(recs.size()), jobs, [&](int i) {
        UtteranceRecord &rec = recs[i];
        rec.asr_nbest = simulate_asr(stale, cm, lex, rec.obs, asr_opt);
        if (rec.asr_nbest.empty()) {
            dead[i] = 1;
            return;
        }
        std::vector<Alternative> ptt = decode_mbest(fresh, cm, rec.obs, cfg.decode);
        rec.kbest = combine_kbest(rec.asr_nbest, ptt, cfg.n, cfg.decode.m);
    });
    int excluded = 0;
    std::vector<UtteranceRecord> kept;
    kept.reserve(recs.size());
    for (size_t i = 0; i < recs.size(); ++i) {
        if (dead[i]) {
            ++excluded;
            continue;
        }
        kept.push_back(std::move(recs[i]));
    }
    recs = std::move(kept);
    return excluded;
}

SetMetrics eval_set(const std::vector<UtteranceRecord> &recs, const std::vector<int> &picks,
                    int excluded) {
    SetMetrics m;
    m.utterances = static_cast<int>(recs.size());
    m.excluded = excluded;
    if (recs.empty()) return m;
    for (size_t i = 0; i < recs.size(); ++i) {
        const UtteranceRecord &rec = recs[i];
        m.baseline_wer += wer(rec.asr_nbest[0].words, rec.reference);
        m.corrected_wer += wer(rec.kbest[picks[i]].words, rec.reference);
        m.oracle_wer += oracle_wer(rec.kbest, rec.reference);
        double asr_best = 1.0;
        for (const auto &h : rec.kbest)
            if (h.source == Source::kAsr) asr_best = std::min(asr_best, wer(h.words, rec.reference));
        m.asr_oracle_wer += asr_best;
    }
    const double n = static_cast<double>(recs.size());
    m.baseline_wer /= n;
    m.corrected_wer /= n;
    m.oracle_wer /= n;
    m.asr_oracle_wer /= n;
    m.rel_reduction =
        m.baseline_wer > 0.0 ? (m.baseline_wer - m.corrected_wer) / m.baseline_wer : 0.0;
    return m;
}

nlohmann::ordered_json metrics_json(const SetMetrics &m) {
    nlohmann::ordered_json j;
    j["utterances"] = m.utterances;
    j["excluded"] = m.excluded;
    j["baseline_wer"] = fmt_sig(m.baseline_wer, 12);
    j["corrected_wer"] = fmt_sig(m.corrected_wer, 12);
    j["oracle_wer"] = fmt_sig(m.oracle_wer, 12);
    j["asr_oracle_wer"] = fmt_sig(m.asr_oracle_wer, 12);
    j["rel_reduction"] = fmt_sig(m.rel_reduction, 12);
    return j;
}

void write_file(const std::string &path, const std::string &bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    out << bytes;
}

}  // namespace

std::string serialize_report(const BenchmarkReport &report) {
    nlohmann::ordered_json j;
    j["config_hash"] = report.hash;
    j["channel"] = {{"true_p_ins", fmt_sig(report.channel.true_p_ins, 12)},
                    {"estimated_p_ins", fmt_sig(report.channel.estimated_p_ins, 12)},
                    {"true_diag_mass", fmt_sig(report.channel.true_diag_mass, 12)},
                    {"estimated_diag_mass", fmt_sig(report.channel.estimated_diag_mass, 12)}};
    j["sets"] = {{"head", metrics_json(report.head)}, {"tail", metrics_json(report.tail)}};
    nlohmann::ordered_json abl = nlohmann::ordered_json::array();
    for (const auto &a : report.ablations) {
        nlohmann::ordered_json row;
        row["name"] = a.name;
        row["masked_groups"] = a.masked_groups;
        row["head_corrected_wer"] = fmt_sig(a.head_corrected_wer, 12);
        row["tail_corrected_wer"] = fmt_sig(a.tail_corrected_wer, 12);
        abl.push_back(std::move(row));
    }
    j["ablations"] = std::move(abl);
    j["train"] = {{"records", report.train_records},
                  {"excluded", report.train_excluded},
                  {"discarded", report.train_discarded},
                  {"final_loss", fmt_sig(report.final_train_loss, 12)}};
    return j.dump(2) + "\n";
}

std::string format_report_table(const BenchmarkReport &report) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-6s %5s %5s %9s %10s %8s %11s %8s\n", "set", "utts", "excl",
                  "baseline", "corrected", "oracle", "asr-oracle", "rel-red");
    out += buf;
    auto row = [&](const char *name, const SetMetrics &m) {
        std::snprintf(buf, sizeof buf, "%-6s %5d %5d %9.4f %10.4f %8.4f %11.4f %8.4f\n", name,
                      m.utterances, m.excluded, m.baseline_wer, m.corrected_wer, m.oracle_wer,
                      m.asr_oracle_wer, m.rel_reduction);
        out += buf;
    };
    row("head", report.head);
    row("tail", report.tail);
    out += "\n";
    std::snprintf(buf, sizeof buf, "%-16s %14s %14s\n", "ablation", "head-corrected",
                  "tail-corrected");
    out += buf;
    for (const auto &a : report.ablations) {
        std::snprintf(buf, sizeof buf, "%-16s %14.4f %14.4f\n", a.name.c_str(),
                      a.head_corrected_wer, a.tail_corrected_wer);
        out += buf;
    }
    return out;
}

BenchmarkReport run_benchmark(const ScenarioConfig &cfg, const std::string &out_dir, int jobs) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    BenchmarkReport report;
    report.hash = config_hash(cfg);

    Scenario scn = stage("generate", [&] { return generate_scenario(cfg); });
    const Lexicon &lex = scn.lexicon;
    QuerySamplers samplers{&scn, ZipfSampler(cfg.head_words, cfg.zipf_exponent)};

    std::vector<std::string> all_entities = scn.snapshot_entities;
    all_entities.insert(all_entities.end(), scn.fresh_train_entities.begin(),
                        scn.fresh_train_entities.end());
    all_entities.insert(all_entities.end(), scn.tail_entities.begin(), scn.tail_entities.end());

    // Held-out aligned dev split for channel estimation.
    std::vector<std::pair<PhoneSeq, PhoneSeq>> dev;
    CorruptCounts counts;
    stage("dev split", [&] {
        UtteranceKind kind{0.5, &all_entities};
        make_utterances(scn, cfg, kStreamDev, "dev", cfg.confusion_dev_utterances, kind, samplers,
                        &dev, &counts);
        return 0;
    });
    ConfusionModel cm = stage("confusion estimation", [&] {
        return estimate_confusion(dev, lex.inventory());
    });
    report.channel.true_p_ins =
        counts.total_pairs() > 0
            ? static_cast<double>(counts.inss) / static_cast<double>(counts.total_pairs())
            : 0.0;
    report.channel.estimated_p_ins = cm.p_ins();
    report.channel.true_diag_mass = 1.0 - cfg.rates.sub - cfg.rates.del;
    stage("channel recovery", [&] {
        ConfusionCounts cc = accumulate_alignment_counts(dev, lex.inventory().size());
        double kept = 0.0, total = 0.0;
        for (int r = 1; r < lex.inventory().size(); ++r) {
            int64_t row = 0;
            for (size_t o = 0; o < cc.counts[r].size(); ++o) row += cc.counts[r][o];
            if (row == 0) continue;
            kept += static_cast<double>(row) * cm.emission(r, r);
            total += static_cast<double>(row);
        }
        report.channel.estimated_diag_mass = total > 0.0 ? kept / total : 0.0;
        return 0;
    });

    NGramLM stale_lm = stage("stale lm", [&] { return train_ngram(scn.stale_corpus, cfg.lm_order); });
    NGramLM entity_lm =
        stage("entity lm", [&] { return train_ngram(scn.entity_corpus, cfg.lm_order); });

    std::set<std::string> stale_vocab_set;
    for (const auto &sent : scn.stale_corpus)
        for (const auto &w : sent) stale_vocab_set.insert(w);
    GraphOptions stale_opts;
    stale_opts.order = cfg.graph_order;
    stale_opts.vocabulary.assign(stale_vocab_set.begin(), stale_vocab_set.end());
    DecodingGraph stale_graph =
        stage("stale graph", [&] { return build_graph(lex, stale_lm, stale_opts); });
    GraphOptions fresh_opts;
    fresh_opts.order = cfg.graph_order;
    DecodingGraph fresh_graph =
        stage("fresh graph", [&] { return build_graph(lex, entity_lm, fresh_opts); });

    // Training traffic sees the catalog as of training time: the snapshot
    // entities the recognizer still knows plus the ones added since, but
    // never the evaluation tail.
    std::vector<std::string> train_catalog = scn.snapshot_entities;
    train_catalog.insert(train_catalog.end(), scn.fresh_train_entities.begin(),
                         scn.fresh_train_entities.end());
    UtteranceKind train_kind{0.75, &train_catalog};
    UtteranceKind head_kind{1.0, nullptr};
    UtteranceKind tail_kind{0.0, &scn.tail_entities};
    std::vector<UtteranceRecord> train_recs =
        make_utterances(scn, cfg, kStreamTrain, "train", cfg.rescorer_train_utterances, train_kind,
                        samplers, nullptr, nullptr);
    std::vector<UtteranceRecord> head_recs = make_utterances(
        scn, cfg, kStreamTestHead, "head", cfg.test_head_utterances, head_kind, samplers, nullptr,
        nullptr);
    std::vector<UtteranceRecord> tail_recs = make_utterances(
        scn, cfg, kStreamTestTail, "tail", cfg.test_tail_utterances, tail_kind, samplers, nullptr,
        nullptr);

    report.train_excluded = stage("train decode", [&] {
        return fill_hypotheses(train_recs, stale_graph, fresh_graph, cm, lex, cfg, jobs);
    });
    int head_excluded = stage("head decode", [&] {
        return fill_hypotheses(head_recs, stale_graph, fresh_graph, cm, lex, cfg, jobs);
    });
    int tail_excluded = stage("tail decode", [&] {
        return fill_hypotheses(tail_recs, stale_graph, fresh_graph, cm, lex, cfg, jobs);
    });
    report.train_records = static_cast<int>(train_recs.size());

    std::vector<const NGramLM *> components = {&stale_lm, &entity_lm};
    FeatureExtractor fx(lex, cm, components);
    TrainResult tr = stage("rescorer training", [&] { return train_mwer(fx, train_recs, cfg.train); });
    report.train_discarded = tr.discarded_records;
    report.final_train_loss = tr.epoch_loss.back();

    stage("evaluation", [&] {
        std::vector<int> head_picks = rescore(tr.model, fx, head_recs);
        std::vector<int> tail_picks = rescore(tr.model, fx, tail_recs);
        report.head = eval_set(head_recs, head_picks, head_excluded);
        report.tail = eval_set(tail_recs, tail_picks, tail_excluded);
        return 0;
    });

    const std::vector<std::pair<std::string, std::vector<std::string>>> masks = {
        {"no_phonetic", {"phonetic"}},
        {"no_acoustic", {"acoustic"}},
        {"no_interp_lm", {"interp_lm"}},
        {"no_component_lm", {"component_lm"}},
        {"no_other", {"other"}},
        {"no_lm", {"interp_lm", "component_lm"}},
    };
    for (const auto &[name, groups] : masks) {
        stage(name.c_str(), [&] {
            TrainOptions mopt = cfg.train;
            mopt.masked_groups = groups;
            TrainResult mtr = train_mwer(fx, train_recs, mopt);
            AblationResult a;
            a.name = name;
            a.masked_groups = groups;
            std::vector<int> hp = rescore(mtr.model, fx, head_recs);
            std::vector<int> tp = rescore(mtr.model, fx, tail_recs);
            a.head_corrected_wer = eval_set(head_recs, hp, 0).corrected_wer;
            a.tail_corrected_wer = eval_set(tail_recs, tp, 0).corrected_wer;
            report.ablations.push_back(std::move(a));
            return 0;
        });
    }

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!out_dir.empty()) {
        stage("artifacts", [&] {
            std::filesystem::create_directories(out_dir);
            auto path = [&](const char *name) { return out_dir + "/" + name; };
            save_lexicon(lex, path("lexicon.txt"));
            stale_lm.save(path("stale.arpa"));
            entity_lm.save(path("entity.arpa"));
            save_confusion(cm, path("confusion.json"));
            save_model(tr.model, path("rescorer.json"));
            save_records(train_recs, lex.inventory(), path("train.jsonl"));
            save_records(head_recs, lex.inventory(), path("test_head.jsonl"));
            save_records(tail_recs, lex.inventory(), path("test_tail.jsonl"));
            write_file(path("report.json"), serialize_report(report));
            write_file(path("report.txt"), format_report_table(report));
            nlohmann::ordered_json manifest;
            nlohmann::ordered_json arts = nlohmann::ordered_json::array();
            for (const char *name :
                 {"lexicon.txt", "stale.arpa", "entity.arpa", "confusion.json", "rescorer.json",
                  "train.jsonl", "test_head.jsonl", "test_tail.jsonl", "report.json", "report.txt"})
                arts.push_back({{"name", name}, {"path", name}});
            manifest["artifacts"] = std::move(arts);
            manifest["config"] = nlohmann::ordered_json::parse(serialize_config(cfg));
            manifest["config_hash"] = report.hash;
            manifest["thresholds"] = {
                {"tail_rel_reduction_min", fmt_sig(kTailRelReductionMin, 12)},
                {"head_rel_degradation_max", fmt_sig(kHeadRelDegradationMax, 12)}};
            write_file(path("manifest.json"), manifest.dump(2) + "\n");
            return 0;
        });
    }
    return report;
}

}  // namespace pcorr
