#include "pcorr/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <unordered_map>

namespace pcorr {

namespace {

// Word-history arena. Identical word sequences share one id, so state
// recombination on (node, history id) is recombination on the emitted words.
class HistArena {
 public:
    HistArena() : nodes_{{-1, -1}} {}

    int32_t child(int32_t parent, int32_t word) {
        int64_t key = (static_cast<int64_t>(parent) << 32) | static_cast<uint32_t>(word);
        auto it = index_.find(key);
        if (it != index_.end()) return it->second;
        int32_t id = static_cast<int32_t>(nodes_.size());
        nodes_.push_back({parent, word});
        index_.emplace(key, id);
        return id;
    }

    WordSeq words(int32_t id, const DecodingGraph &g) const {
        WordSeq out;
        while (id > 0) {
            out.push_back(g.word_label(nodes_[static_cast<size_t>(id)].word));
            id = nodes_[static_cast<size_t>(id)].parent;
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

 private:
    struct Node {
        int32_t parent;
        int32_t word;
    };
    std::vector<Node> nodes_;
    std::unordered_map<int64_t, int32_t> index_;
};

struct State {
    int32_t hist;
    double score;
    int32_t dels;  // consecutive deletions since the last consuming move
};

using Layer = std::unordered_map<int32_t, std::vector<State>>;

struct HeapEntry {
    double score;
    int32_t node;
    int32_t hist;
    int32_t dels;
};

struct HeapLess {
    bool operator()(const HeapEntry &a, const HeapEntry &b) const {
        if (a.score != b.score) return a.score < b.score;  // max-heap on score
        if (a.node != b.node) return a.node > b.node;
        if (a.hist != b.hist) return a.hist > b.hist;
        return a.dels > b.dels;
    }
};

std::vector<int32_t> sorted_nodes(const Layer &layer) {
    std::vector<int32_t> nodes;
    nodes.reserve(layer.size());
    for (const auto &kv : layer) nodes.push_back(kv.first);
    std::sort(nodes.begin(), nodes.end());
    return nodes;
}

}  // namespace

std::vector<Alternative> decode_mbest(const DecodingGraph &graph, const ConfusionModel &cm,
                                      const PhoneSeq &obs, const DecodeOptions &opt) {
    if (opt.beam < 1) throw DataError("beam must be >= 1");
    if (opt.m < 1) throw DataError("m must be >= 1");
    for (PhoneId p : obs)
        if (p <= 0 || p >= graph.inventory.size())
            throw DataError("observation phone outside the graph inventory");

    HmmView hmm = hmm_step_weights(graph, cm);
    HistArena arena;
    size_t beam = static_cast<size_t>(opt.beam);

    // Insert-or-improve; keeps at most `beam` states per node, best scores
    // first on eviction (ties keep the smaller history id). Same-history
    // states recombine on the (score, consecutive-deletion) Pareto frontier:
    // a lower-scoring state survives when it has more deletion headroom,
    // because the paths still open to it are a superset of the other's.
    auto offer = [&](Layer &layer, int32_t node, int32_t hist, double score,
                     int32_t dels) -> bool {
        if (score == kLogZero) return false;
        auto &bucket = layer[node];
        for (const State &s : bucket)
            if (s.hist == hist && s.score >= score && s.dels <= dels) return false;
        bucket.erase(std::remove_if(bucket.begin(), bucket.end(),
                                    [&](const State &s) {
                                        return s.hist == hist && s.score <= score &&
                                               s.dels >= dels;
                                    }),
                     bucket.end());
        if (bucket.size() < beam) {
            bucket.push_back({hist, score, dels});
            return true;
        }
        size_t worst = 0;
        for (size_t i = 1; i < bucket.size(); ++i) {
            const State &a = bucket[i];
            const State &w = bucket[worst];
            if (a.score < w.score || (a.score == w.score && a.hist > w.hist)) worst = i;
        }
        const State &w = bucket[worst];
        if (score > w.score || (score == w.score && hist < w.hist)) {
            bucket[worst] = {hist, score, dels};
            return true;
        }
        return false;
    };

    const bool windowed = std::isfinite(opt.score_window);
    auto layer_best = [](const Layer &layer) {
        double best = kLogZero;
        for (const auto &kv : layer)
            for (const State &s : kv.second) best = std::max(best, s.score);
        return best;
    };

    // Global pruning: window relative to the position's best score, then a
    // hard cap on the surviving state count (best first, deterministic ties).
    auto prune = [&](Layer &layer) {
        const bool capped = opt.max_active < DecodeOptions::kNoLimit;
        if ((!windowed && !capped) || layer.empty()) return;
        std::vector<HeapEntry> states;
        for (const auto &kv : layer)
            for (const State &s : kv.second) states.push_back({s.score, kv.first, s.hist, s.dels});
        if (windowed) {
            double floor = layer_best(layer) - opt.score_window;
            states.erase(std::remove_if(states.begin(), states.end(),
                                        [&](const HeapEntry &e) { return e.score < floor; }),
                         states.end());
        }
        if (capped && states.size() > static_cast<size_t>(opt.max_active)) {
            std::sort(states.begin(), states.end(), [](const HeapEntry &a, const HeapEntry &b) {
                if (a.score != b.score) return a.score > b.score;
                if (a.node != b.node) return a.node < b.node;
                if (a.hist != b.hist) return a.hist < b.hist;
                return a.dels < b.dels;
            });
            states.resize(static_cast<size_t>(opt.max_active));
        }
        Layer kept;
        for (const HeapEntry &e : states) kept[e.node].push_back({e.hist, e.score, e.dels});
        layer = std::move(kept);
    };

    // Deletion closure at a fixed position: best-first relaxation of
    // no-consume arc moves. Every deletion score is strictly negative, so
    // popping in descending score order finalizes each (node, history).
    auto closure = [&](Layer &layer) {
        double floor = windowed ? layer_best(layer) - opt.score_window : kLogZero;
        std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess> heap;
        for (int32_t node : sorted_nodes(layer))
            for (const State &s : layer[node]) heap.push({s.score, node, s.hist, s.dels});
        while (!heap.empty()) {
            HeapEntry e = heap.top();
            heap.pop();
            auto it = layer.find(e.node);
            if (it == layer.end()) continue;
            bool current = false;
            for (const State &s : it->second)
                if (s.hist == e.hist && s.score == e.score && s.dels == e.dels) {
                    current = true;
                    break;
                }
            if (!current || e.dels >= opt.max_consecutive_deletions) continue;
            for (const GraphArc *a = graph.arcs_begin(e.node); a != graph.arcs_end(e.node);
                 ++a) {
                double ns = e.score + hmm.deletion(*a);
                if (!std::isfinite(ns) || ns < floor) continue;
                int32_t nh = a->word >= 0 ? arena.child(e.hist, a->word) : e.hist;
                if (offer(layer, a->dst, nh, ns, e.dels + 1))
                    heap.push({ns, a->dst, nh, e.dels + 1});
            }
        }
    };

    Layer cur;
    cur[graph.start] = {{0, 0.0, 0}};
    for (size_t pos = 0; pos < obs.size(); ++pos) {
        closure(cur);
        prune(cur);
        Layer next;
        PhoneId o = obs[pos];
        double ins = hmm.insertion(o);
        double next_best = kLogZero;
        auto gated_offer = [&](int32_t node, int32_t hist, double score, int32_t dels) {
            if (windowed) {
                if (score > next_best) next_best = score;
                if (score < next_best - opt.score_window) return;
            }
            offer(next, node, hist, score, dels);
        };
        for (int32_t node : sorted_nodes(cur)) {
            for (const State &s : cur[node]) {
                if (std::isfinite(ins)) gated_offer(node, s.hist, s.score + ins, 0);
                for (const GraphArc *a = graph.arcs_begin(node); a != graph.arcs_end(node);
                     ++a) {
                    double ns = s.score + hmm.consume(*a, o);
                    if (!std::isfinite(ns)) continue;
                    int32_t nh = a->word >= 0 ? arena.child(s.hist, a->word) : s.hist;
                    gated_offer(a->dst, nh, ns, 0);
                }
            }
        }
        cur = std::move(next);
    }
    closure(cur);

    std::map<WordSeq, double> best;
    for (int32_t node : sorted_nodes(cur)) {
        if (!graph.is_final(node)) continue;
        double eos = graph.eos_weight[static_cast<size_t>(node)];
        for (const State &s : cur[node]) {
            double total = s.score + eos;
            if (!std::isfinite(total)) continue;
            WordSeq words = arena.words(s.hist, graph);
            auto it = best.find(words);
            if (it == best.end())
                best.emplace(std::move(words), total);
            else if (total > it->second)
                it->second = total;
        }
    }

    std::vector<Alternative> out;
    out.reserve(best.size());
    for (auto &kv : best) out.push_back({kv.first, kv.second});
    std::sort(out.begin(), out.end(), [](const Alternative &a, const Alternative &b) {
        if (a.logprob != b.logprob) return a.logprob > b.logprob;
        return a.words < b.words;
    });
    if (out.size() > static_cast<size_t>(opt.m)) out.resize(static_cast<size_t>(opt.m));
    return out;
}

const PhoneSeq &select_observation(const std::vector<ScoredPhones> &asr_nbest) {
    if (asr_nbest.empty()) throw DataError("empty recognizer n-best list");
    size_t best = 0;
    for (size_t i = 1; i < asr_nbest.size(); ++i)
        if (asr_nbest[i].acoustic_likelihood > asr_nbest[best].acoustic_likelihood) best = i;
    return asr_nbest[best].phones;
}

}  // namespace pcorr
