#ifndef PCORR_GRAPH_HPP
#define PCORR_GRAPH_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcorr/lexicon.hpp"
#include "pcorr/ngram_lm.hpp"
#include "pcorr/phone_align.hpp"

namespace pcorr {

struct GraphOptions {
    // LM context length cap; 1 builds the single-context (unigram) graph.
    int order = 3;
    // Words the graph may emit; empty means every lexicon word. Words listed
    // here must exist in the lexicon.
    std::vector<std::string> vocabulary;
};

struct GraphArc {
    int32_t src = 0;
    int32_t dst = 0;
    PhoneId phone = 0;
    int32_t word = -1;  // index into DecodingGraph::output_words, -1 = none
    double weight = 0.0;  // natural-log share of the word's LM probability
};

// Static expansion of the lexicon over the LM's context states. Nodes
// [0, context_count) are LM context nodes (all of them final); the rest are
// in-word chain nodes. Every complete path start->...->context emits a word
// sequence whose arc-weight total plus the end node's eos weight equals
// ln(10) times the LM sequence_logprob of those words.
struct DecodingGraph {
    PhoneInventory inventory;
    std::vector<std::string> output_words;
    std::vector<std::vector<std::string>> contexts;  // per context node
    int32_t num_nodes = 0;
    int32_t context_count = 0;
    int32_t start = 0;
    std::vector<GraphArc> arcs;          // grouped by src
    std::vector<int32_t> arc_offset;     // size num_nodes + 1
    std::vector<double> eos_weight;      // size context_count, natural log

    const GraphArc *arcs_begin(int32_t node) const {
        return arcs.data() + arc_offset[static_cast<size_t>(node)];
    }
    const GraphArc *arcs_end(int32_t node) const {
        return arcs.data() + arc_offset[static_cast<size_t>(node) + 1];
    }
    bool is_final(int32_t node) const { return node < context_count; }
    const std::string &word_label(int32_t word) const {
        return output_words[static_cast<size_t>(word)];
    }
};

// Expands lexicon words over the LM contexts of length <= order-1. Each
// (context, word, variant) becomes a chain of phone arcs carrying the word's
// context-conditional LM log probability distributed uniformly over the
// chain (path totals are preserved exactly). Unreachable nodes are pruned;
// node ids are deterministic for identical inputs.
DecodingGraph build_graph(const Lexicon &lex, const NGramLM &g, const GraphOptions &opt = {});

// Text dump for debugging and golden tests: a start line, one line per arc
// `src<TAB>dst<TAB>phone<TAB>word-or-dash<TAB>weight`, then final lines
// `final<TAB>node<TAB>eos-weight`.
std::string dump_graph(const DecodingGraph &g);

// Per-step scores of the insertion-wrapped HMM over the graph. No nodes are
// materialized: insertion loops at the current node and consumes one
// observed phone; an arc may consume a phone (substitution/match) or none
// (deletion). All scores are natural log.
struct HmmView {
    const DecodingGraph *graph = nullptr;
    const ConfusionModel *cm = nullptr;
    double ln_pins = kLogZero;
    double ln_keep = 0.0;
    std::vector<int> to_cm;  // inventory phone id -> model index

    double insertion(PhoneId obs) const {
        return ln_pins + std::log(cm->emission(to_cm[static_cast<size_t>(obs)], 0));
    }
    double consume(const GraphArc &a, PhoneId obs) const {
        return ln_keep + a.weight +
               std::log(cm->emission(to_cm[static_cast<size_t>(obs)],
                                     to_cm[static_cast<size_t>(a.phone)]));
    }
    double deletion(const GraphArc &a) const {
        return ln_keep + a.weight + std::log(cm->emission(0, to_cm[static_cast<size_t>(a.phone)]));
    }
};

// Binds a confusion model to the graph's inventory. Every graph phone must
// exist in the model.
HmmView hmm_step_weights(const DecodingGraph &g, const ConfusionModel &cm);

}  // namespace pcorr

#endif  // PCORR_GRAPH_HPP
