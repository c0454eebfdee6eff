#ifndef PCORR_TESTS_EXHAUSTIVE_REF_HPP
#define PCORR_TESTS_EXHAUSTIVE_REF_HPP

// Reference implementations and generators used by both the unit tests and
// the acceptance checks. The exhaustive m-best search below shares nothing
// with the production decoder: it is a plain fixpoint sweep over complete
// (node, deletion-run, emitted-words) states with no beams, no history
// arena and no priority queues. Identical full states merge by max score,
// which cannot change any reachable score.

#include <algorithm>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "pcorr/decoder.hpp"
#include "pcorr/graph.hpp"
#include "pcorr/sim.hpp"

namespace pcorr_test {

using namespace pcorr;

struct FullState {
    int32_t node;
    int32_t dels;
    WordSeq words;
    bool operator<(const FullState &o) const {
        return std::tie(node, dels, words) < std::tie(o.node, o.dels, o.words);
    }
};

using Frontier = std::map<FullState, double>;

inline void relax(Frontier &f, FullState s, double score) {
    auto it = f.find(s);
    if (it == f.end())
        f.emplace(std::move(s), score);
    else if (score > it->second)
        it->second = score;
}

// Closes deletion moves by sweeping until no state improves.
inline void exhaustive_closure(const DecodingGraph &g, const HmmView &hmm, int max_dels,
                               Frontier &f) {
    bool changed = true;
    while (changed) {
        changed = false;
        Frontier snapshot = f;
        for (const auto &kv : snapshot) {
            if (kv.first.dels >= max_dels) continue;
            for (const GraphArc *a = g.arcs_begin(kv.first.node);
                 a != g.arcs_end(kv.first.node); ++a) {
                double ns = kv.second + hmm.deletion(*a);
                if (!std::isfinite(ns)) continue;
                FullState t{a->dst, kv.first.dels + 1, kv.first.words};
                if (a->word >= 0) t.words.push_back(g.word_label(a->word));
                auto it = f.find(t);
                if (it == f.end() || ns > it->second) {
                    relax(f, std::move(t), ns);
                    changed = true;
                }
            }
        }
    }
}

inline std::vector<Alternative> exhaustive_mbest(const DecodingGraph &g, const ConfusionModel &cm,
                                                 const PhoneSeq &obs, const DecodeOptions &opt) {
    HmmView hmm = hmm_step_weights(g, cm);
    Frontier cur;
    cur[{g.start, 0, {}}] = 0.0;
    for (PhoneId o : obs) {
        exhaustive_closure(g, hmm, opt.max_consecutive_deletions, cur);
        Frontier next;
        double ins = hmm.insertion(o);
        for (const auto &kv : cur) {
            if (std::isfinite(ins)) relax(next, {kv.first.node, 0, kv.first.words}, kv.second + ins);
            for (const GraphArc *a = g.arcs_begin(kv.first.node); a != g.arcs_end(kv.first.node);
                 ++a) {
                double ns = kv.second + hmm.consume(*a, o);
                if (!std::isfinite(ns)) continue;
                FullState t{a->dst, 0, kv.first.words};
                if (a->word >= 0) t.words.push_back(g.word_label(a->word));
                relax(next, std::move(t), ns);
            }
        }
        cur = std::move(next);
    }
    exhaustive_closure(g, hmm, opt.max_consecutive_deletions, cur);

    std::map<WordSeq, double> best;
    for (const auto &kv : cur) {
        if (!g.is_final(kv.first.node)) continue;
        double total = kv.second + g.eos_weight[static_cast<size_t>(kv.first.node)];
        if (!std::isfinite(total)) continue;
        auto it = best.find(kv.first.words);
        if (it == best.end())
            best.emplace(kv.first.words, total);
        else if (total > it->second)
            it->second = total;
    }
    std::vector<Alternative> out;
    for (auto &kv : best) out.push_back({kv.first, kv.second});
    std::sort(out.begin(), out.end(), [](const Alternative &a, const Alternative &b) {
        if (a.logprob != b.logprob) return a.logprob > b.logprob;
        return a.words < b.words;
    });
    if (out.size() > static_cast<size_t>(opt.m)) out.resize(static_cast<size_t>(opt.m));
    return out;
}

// Ranked lists agree when scores line up per rank and any word disagreement
// is a reorder among entries whose scores tie within the tolerance.
inline bool mbest_lists_match(const std::vector<Alternative> &got,
                              const std::vector<Alternative> &want, double tol) {
    if (got.size() != want.size()) return false;
    for (size_t i = 0; i < got.size(); ++i) {
        if (std::fabs(got[i].logprob - want[i].logprob) > tol) return false;
        if (got[i].words == want[i].words) continue;
        auto near = [&](const std::vector<Alternative> &list, const Alternative &x) {
            for (const Alternative &a : list)
                if (a.words == x.words && std::fabs(a.logprob - x.logprob) <= tol) return true;
            return false;
        };
        if (!near(want, got[i]) || !near(got, want[i])) return false;
    }
    return true;
}

struct MicroInstance {
    Lexicon lexicon;
    NGramLM lm;
    DecodingGraph graph;
    ConfusionModel cm;
    PhoneSeq obs;
    DecodeOptions opt;
};

// Tiny randomized world: a handful of short words, a small corpus, a dense
// random channel and a random observation.
inline MicroInstance random_micro_instance(uint64_t seed) {
    Rng rng(seed, 17);
    MicroInstance mi;

    int alphabet = 3 + static_cast<int>(rng.below(3));  // 3..5 phones
    std::vector<std::string> phones;
    for (int i = 0; i < alphabet; ++i) phones.push_back("q" + std::to_string(i));

    for (const auto &ph : phones) mi.lexicon.inventory().add(ph);
    int nwords = 1 + static_cast<int>(rng.below(4));  // 1..4 words
    std::vector<std::string> words;
    for (int w = 0; w < nwords; ++w) {
        // Mostly 2-3 phones; an occasional 1-phone word keeps full-word
        // deletions reachable without blowing up the reference search.
        int len = w == 0 ? 1 + static_cast<int>(rng.below(3))
                         : 2 + static_cast<int>(rng.below(2));
        PhoneSeq pron(static_cast<size_t>(len));
        for (PhoneId &p : pron)
            p = static_cast<PhoneId>(1 + rng.below(static_cast<uint32_t>(alphabet)));
        words.push_back("w" + std::to_string(w));
        mi.lexicon.add_entry(words.back(), pron);
    }

    int sentences = 3 + static_cast<int>(rng.below(6));
    std::vector<WordSeq> corpus;
    for (int s = 0; s < sentences; ++s) {
        WordSeq sent(1 + rng.below(3));
        for (auto &w : sent) w = words[rng.below(static_cast<uint32_t>(words.size()))];
        corpus.push_back(std::move(sent));
    }
    int order = 1 + static_cast<int>(rng.below(2));
    mi.lm = train_ngram(corpus, order);
    mi.graph = build_graph(mi.lexicon, mi.lm, {order, {}});

    // Dense random channel: every cell positive, rows normalized.
    int p = alphabet;
    std::vector<std::vector<double>> em(static_cast<size_t>(p + 1),
                                        std::vector<double>(static_cast<size_t>(p + 1), 0.0));
    for (int r = 0; r <= p; ++r) {
        double sum = 0.0;
        for (int o = r == 0 ? 1 : 0; o <= p; ++o) {
            double v = 0.05 + rng.uniform();
            if (r > 0 && o == r) v += 2.0;  // keep the channel identity-leaning
            em[static_cast<size_t>(r)][static_cast<size_t>(o)] = v;
            sum += v;
        }
        for (int o = 0; o <= p; ++o) em[static_cast<size_t>(r)][static_cast<size_t>(o)] /= sum;
    }
    std::vector<std::string> labels;
    for (int i = 1; i <= p; ++i) labels.push_back(mi.lexicon.inventory().label(i));
    mi.cm = ConfusionModel(labels, em, 0.05 + 0.25 * rng.uniform());

    mi.obs.resize(1 + rng.below(6));
    for (PhoneId &o : mi.obs) o = static_cast<PhoneId>(1 + rng.below(static_cast<uint32_t>(alphabet)));

    mi.opt.beam = DecodeOptions::kNoBeam;
    mi.opt.m = 10;
    mi.opt.max_consecutive_deletions = 1 + static_cast<int>(rng.below(3));
    return mi;
}

}  // namespace pcorr_test

#endif  // PCORR_TESTS_EXHAUSTIVE_REF_HPP
