#ifndef PCORR_DECODER_HPP
#define PCORR_DECODER_HPP

#include <limits>
#include <string>
#include <vector>

#include "pcorr/graph.hpp"

namespace pcorr {

// One entry of the M-best list of phonetic alternatives.
struct Alternative {
    WordSeq words;
    double logprob = 0.0;  // natural-log path score including the eos weight
};

struct DecodeOptions {
    int beam = 15;  // states kept per (node, position) class
    int m = 10;     // alternatives returned
    int max_consecutive_deletions = 5;
    // Optional global pruning on top of the per-node beam: keep at most
    // max_active states per observation position and drop states more than
    // score_window below the position's best. Both default to off, leaving
    // the search exact up to the per-node beam.
    int max_active = kNoLimit;
    double score_window = kNoWindow;
    static constexpr int kNoBeam = 1 << 30;
    static constexpr int kNoLimit = 1 << 30;
    static constexpr double kNoWindow = std::numeric_limits<double>::infinity();
};

// Viterbi beam search over the insertion-wrapped HMM. Processes observation
// positions left to right; at each position, deletion moves are closed in
// best-first order (scores are strictly negative so the closure terminates),
// same-history states at a node recombine on the (score, consecutive
// deletions) Pareto frontier, and each node keeps the top `beam` states.
// Returns up to m distinct word sequences sorted
// by score descending, ties lexicographic ascending. An empty list means no
// hypothesis completed; callers fall back to the recognizer output.
std::vector<Alternative> decode_mbest(const DecodingGraph &graph, const ConfusionModel &cm,
                                      const PhoneSeq &obs, const DecodeOptions &opt = {});

// Picks the phone sequence whose acoustic likelihood is largest; ties keep
// the earliest entry.
struct ScoredPhones {
    PhoneSeq phones;
    double acoustic_likelihood = 0.0;
};
const PhoneSeq &select_observation(const std::vector<ScoredPhones> &asr_nbest);

}  // namespace pcorr

#endif  // PCORR_DECODER_HPP
