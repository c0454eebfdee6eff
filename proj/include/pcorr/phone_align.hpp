#ifndef PCORR_PHONE_ALIGN_HPP
#define PCORR_PHONE_ALIGN_HPP

#include <string>
#include <vector>

#include "pcorr/common.hpp"
#include "pcorr/lexicon.hpp"

namespace pcorr {

// One aligned position: observed symbol vs reference symbol, either of which
// may be epsilon (PhoneInventory::kEps) but never both.
struct AlignmentPair {
    PhoneId observed;
    PhoneId reference;
    bool operator==(const AlignmentPair &o) const {
        return observed == o.observed && reference == o.reference;
    }
};

struct NwCosts {
    double match = 0.0;
    double substitution = 1.0;
    double gap = 1.0;
};

struct NwAlignment {
    std::vector<AlignmentPair> pairs;
    int matches = 0;
    int substitutions = 0;
    int deletions = 0;   // (eps, reference phone): observation is missing it
    int insertions = 0;  // (observed phone, eps): extra symbol in observation
    double cost = 0.0;
};

// Global Needleman-Wunsch alignment with minimal edit cost. Backtracking
// tie-break is fixed: diagonal (match, then substitution) over deletion over
// insertion, so the pair multiset is deterministic.
NwAlignment nw_align(const PhoneSeq &observed, const PhoneSeq &reference,
                     const NwCosts &costs = NwCosts{});

// Alignment-pair counts accumulated over a development set.
// counts[ref][obs] with index 0 = epsilon on either axis.
struct ConfusionCounts {
    std::vector<std::vector<int64_t>> counts;
    int64_t total_pairs = 0;

    explicit ConfusionCounts(int num_symbols)
        : counts(num_symbols, std::vector<int64_t>(num_symbols, 0)) {}
    void add(const NwAlignment &a);
    int64_t insertion_pairs() const;
};

// Noisy-channel emission model: P(observed | reference) over P-bar = P + {eps}
// for every reference phone, an insertion emission row P(observed | eps) over
// P, and a global insertion probability p_ins.
class ConfusionModel {
 public:
    ConfusionModel() = default;
    ConfusionModel(std::vector<std::string> phone_labels,
                   std::vector<std::vector<double>> emission, double p_ins);

    // Labels of the real phones, in row/column order (epsilon is index 0 and
    // carries no label entry here).
    const std::vector<std::string> &phone_labels() const { return labels_; }
    int num_phones() const { return static_cast<int>(labels_.size()); }

    // P(observed | reference); indices are 0 for epsilon, 1..P for phones in
    // phone_labels() order.
    double emission(int observed, int reference) const { return emission_[reference][observed]; }
    double p_ins() const { return p_ins_; }

    // Index of a phone label within this model, or -1. Epsilon is 0.
    int index_of(const std::string &label) const;

    bool operator==(const ConfusionModel &o) const;

 private:
    std::vector<std::string> labels_;
    std::vector<std::vector<double>> emission_;  // [ref 0..P][obs 0..P]
    double p_ins_ = 0.0;
};

// Probability floor applied to every emission cell before renormalization, so
// the decoder never sees a zero-probability confusion.
constexpr double kEmissionFloor = 1e-6;

// Accumulates NW alignments over the dev pairs (observed, reference).
ConfusionCounts accumulate_alignment_counts(
    const std::vector<std::pair<PhoneSeq, PhoneSeq>> &dev, int num_symbols);

// Relative-frequency estimates from the counts: P(o|o') = count(o,o') /
// sum_p count(p,o') and p_ins = sum_p count(p,eps) / |A(U)|, then the floor.
// Reference phones with no counts get an identity-dominant default row; an
// eps row with no counts is uniform over the phones. `labels` fixes the
// phone order (index i+1 in the model corresponds to labels[i]).
ConfusionModel estimate_from_counts(const ConfusionCounts &counts,
                                    const std::vector<std::string> &labels);

// Convenience wrapper: align, count, estimate. The inventory supplies the
// label set; sequences must be encoded against it.
ConfusionModel estimate_confusion(const std::vector<std::pair<PhoneSeq, PhoneSeq>> &dev,
                                  const PhoneInventory &inventory);

// Maximum-probability alignment score (natural log) of observed against
// reference under the channel. Substitution/match steps cost
// log P(o|o') + log(1-p_ins), deletions log P(eps|o') + log(1-p_ins),
// insertions log p_ins + log P(o|eps). Sequences are indexed against the
// model's own phone order (see encode_for below).
double channel_logprob(const ConfusionModel &cm, const PhoneSeq &observed,
                       const PhoneSeq &reference);

// Re-encodes a sequence from an inventory's ids to the model's indices.
PhoneSeq encode_for(const ConfusionModel &cm, const PhoneInventory &inv, const PhoneSeq &seq);

// JSON serialization with probabilities as 12-significant-digit decimal
// strings; serialize(parse(text)) == text for files produced here.
std::string serialize_confusion(const ConfusionModel &cm);
ConfusionModel parse_confusion(const std::string &text);
void save_confusion(const ConfusionModel &cm, const std::string &path);
ConfusionModel load_confusion(const std::string &path);

}  // namespace pcorr

#endif  // PCORR_PHONE_ALIGN_HPP
