#ifndef PCORR_RESCORER_HPP
#define PCORR_RESCORER_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcorr/features.hpp"
#include "pcorr/kbest.hpp"

namespace pcorr {

struct TrainOptions {
    double learning_rate = 1e-2;
    int batch_size = 64;
    int epochs = 50;
    uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double l2 = 1e-4;
    // Feature groups to zero out (see FeatureExtractor::group_names());
    // composites are masked whenever any factor group is masked.
    std::vector<std::string> masked_groups;
};

// Linear hypothesis scorer over the retained feature columns. Rows are the
// extractor's raw values; score() standardizes with the stored training
// statistics before the dot product.
struct RescorerModel {
    std::vector<std::string> feature_names;
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stddevs;
    std::vector<std::string> masked_groups;
    TrainOptions trained_with;

    double score(const std::vector<double> &reduced_raw_row) const;
    // Positions of feature_names within a full extractor schema; throws
    // DataError when a stored feature is missing from it.
    std::vector<int> column_map(const std::vector<FeatureDef> &schema) const;
};

// One training utterance after feature extraction: raw reduced rows plus the
// word error rate of each hypothesis against the reference.
struct TrainRecord {
    std::vector<std::vector<double>> rows;
    std::vector<double> wers;
};

// Expected word error rate of the softmax-normalized linear scorer, averaged
// over the batch, with its exact gradient. Rows must already be standardized.
// No regularization here; the trainer adds the L2 term itself.
std::pair<double, std::vector<double>> mwer_loss(const std::vector<double> &w,
                                                 const std::vector<const TrainRecord *> &batch);

struct TrainResult {
    RescorerModel model;
    // Entry 0 is the loss at the zero weight vector; entry e the full
    // training-set loss after epoch e.
    std::vector<double> epoch_loss;
    int discarded_records = 0;  // hypothesis lists with no error-rate spread
};

// Minimum-expected-WER training: extract features, drop masked groups and
// zero-variance columns, standardize, then Adam over shuffled mini-batches
// from a zero initial weight vector. Records whose hypotheses all share one
// WER carry no signal and are discarded; all records doing so is an error.
TrainResult train_mwer(const FeatureExtractor &extractor,
                       const std::vector<UtteranceRecord> &records, const TrainOptions &opt);

// Index of the highest-scoring kbest entry per record (ties keep the lowest
// index, so the original recognizer ranking wins among equals).
std::vector<int> rescore(const RescorerModel &model, const FeatureExtractor &extractor,
                         const std::vector<UtteranceRecord> &records);

// JSON serialization with weights and statistics as 17-significant-digit
// decimal strings; parse(serialize(m)) reproduces m exactly.
std::string serialize_model(const RescorerModel &model);
RescorerModel parse_model(const std::string &text);
void save_model(const RescorerModel &model, const std::string &path);
RescorerModel load_model(const std::string &path);

}  // namespace pcorr

#endif  // PCORR_RESCORER_HPP
