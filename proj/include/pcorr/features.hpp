#ifndef PCORR_FEATURES_HPP
#define PCORR_FEATURES_HPP

#include <memory>
#include <string>
#include <vector>

#include "pcorr/kbest.hpp"
#include "pcorr/ngram_lm.hpp"
#include "pcorr/phone_align.hpp"

namespace pcorr {

// Pronunciation used for hypothesis scoring. Out-of-lexicon words map to a
// single <unk> phone (see kUnkPhoneLabel), which must exist in the
// inventory. With a confusion model and observation given, multi-variant
// words resolve to the channel-best variant combination.
PhoneSeq pronounce_or_unk(const Lexicon &lex, const WordSeq &words,
                          const ConfusionModel *cm = nullptr, const PhoneSeq *obs = nullptr);

// Population z-scores of one per-list value vector; all zeros when the
// values are constant.
std::vector<double> zscore(const std::vector<double> &values);

// Acoustic-cost source: returns (cost, phone length) for a hypothesis. The
// default implementation scores the hypothesis pronunciation against the
// observation through the confusion channel, standing in for a forced
// alignment against an acoustic model.
class AcousticCostProvider {
 public:
    virtual ~AcousticCostProvider() = default;
    virtual std::pair<double, double> cost(const WordSeq &words, const PhoneSeq &phones,
                                           const PhoneSeq &obs) const = 0;
};

class ChannelAcousticCost : public AcousticCostProvider {
 public:
    ChannelAcousticCost(const ConfusionModel &cm, const PhoneInventory &inv)
        : cm_(cm), inv_(inv) {}
    std::pair<double, double> cost(const WordSeq &words, const PhoneSeq &phones,
                                   const PhoneSeq &obs) const override;

 private:
    const ConfusionModel &cm_;
    const PhoneInventory &inv_;
};

struct FeatureDef {
    std::string name;
    std::vector<std::string> groups;  // one entry; composites carry two
    bool continuous = false;
};

struct FeatureConfig {
    double t5_threshold = -7.0;  // log10(1e-7), component-LM ceiling test
    double eq_tolerance = 1e-9;  // "=" comparisons on continuous values
    int em_iters = 20;           // dynamic interpolation-weight fitting
};

// Turns a K-best list into per-hypothesis raw feature rows. Base quantities
// (channel distance to h_*, phone length, acoustic cost, interpolated and
// per-component LM scores, source flags) pass through per-feature transform
// variants: is-min indicator; differences against h_* clipped below/above
// zero; three-way comparison against h_*; per-list z-score clipped
// below/above zero; list-maximum threshold tests. All pairwise products of
// the continuous transformed features are appended as composites.
// Standardization happens later, in training, over these raw rows.
class FeatureExtractor {
 public:
    FeatureExtractor(const Lexicon &lex, const ConfusionModel &cm,
                     std::vector<const NGramLM *> components,
                     const AcousticCostProvider *acoustic = nullptr, FeatureConfig cfg = {});

    const std::vector<FeatureDef> &schema() const { return schema_; }
    static const std::vector<std::string> &group_names();

    // Raw feature matrix, one row per rec.kbest entry (row 0 is h_*).
    std::vector<std::vector<double>> extract(const UtteranceRecord &rec) const;

 private:
    const Lexicon &lex_;
    const ConfusionModel &cm_;
    std::vector<const NGramLM *> components_;
    const AcousticCostProvider *acoustic_;
    ChannelAcousticCost default_acoustic_;
    FeatureConfig cfg_;
    std::vector<FeatureDef> schema_;
    std::vector<std::pair<int, int>> composites_;  // index pairs into the base block
    int base_count_ = 0;
};

}  // namespace pcorr

#endif  // PCORR_FEATURES_HPP
