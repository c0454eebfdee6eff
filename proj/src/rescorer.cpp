#include "pcorr/rescorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace pcorr {

namespace {

constexpr double kVarianceFloor = 1e-12;

// std::shuffle leaves the permutation up to the library, so spell out
// Fisher-Yates to keep training runs reproducible everywhere.
void shuffle_indices(std::vector<int> &idx, std::mt19937_64 &rng) {
    for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
}

std::vector<double> softmax(const std::vector<double> &scores) {
    double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double sum = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - mx);
        sum += p[i];
    }
    for (double &v : p) v /= sum;
    return p;
}

}  // namespace

double RescorerModel::score(const std::vector<double> &reduced_raw_row) const {
    if (reduced_raw_row.size() != weights.size())
        throw DataError("feature row width does not match the model");
    double s = 0.0;
    for (size_t j = 0; j < weights.size(); ++j)
        s += weights[j] * (reduced_raw_row[j] - means[j]) / stddevs[j];
    return s;
}

std::vector<int> RescorerModel::column_map(const std::vector<FeatureDef> &schema) const {
    std::unordered_map<std::string, int> index;
    for (size_t i = 0; i < schema.size(); ++i) index[schema[i].name] = static_cast<int>(i);
    std::vector<int> map;
    map.reserve(feature_names.size());
    for (const auto &name : feature_names) {
        auto it = index.find(name);
        if (it == index.end()) throw DataError("model feature absent from extractor schema: " + name);
        map.push_back(it->second);
    }
    return map;
}

std::pair<double, std::vector<double>> mwer_loss(const std::vector<double> &w,
                                                 const std::vector<const TrainRecord *> &batch) {
    if (batch.empty()) throw std::logic_error("mwer_loss over an empty batch");
    const size_t dim = w.size();
    double loss = 0.0;
    std::vector<double> grad(dim, 0.0);
    for (const TrainRecord *rec : batch) {
        const size_t k = rec->rows.size();
        std::vector<double> scores(k);
        for (size_t i = 0; i < k; ++i) {
            double s = 0.0;
            for (size_t j = 0; j < dim; ++j) s += w[j] * rec->rows[i][j];
            scores[i] = s;
        }
        std::vector<double> p = softmax(scores);
        double expected = 0.0;
        for (size_t i = 0; i < k; ++i) expected += p[i] * rec->wers[i];
        loss += expected;
        for (size_t i = 0; i < k; ++i) {
            double coeff = p[i] * (rec->wers[i] - expected);
            for (size_t j = 0; j < dim; ++j) grad[j] += coeff * rec->rows[i][j];
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    loss *= inv;
    for (double &g : grad) g *= inv;
    return {loss, std::move(grad)};
}

TrainResult train_mwer(const FeatureExtractor &extractor,
                       const std::vector<UtteranceRecord> &records, const TrainOptions &opt) {
    if (records.empty()) throw DataError("no training records");
    if (opt.batch_size < 1 || opt.epochs < 0 || opt.learning_rate <= 0.0)
        throw DataError("invalid training options");
    const auto &known_groups = FeatureExtractor::group_names();
    for (const auto &g : opt.masked_groups)
        if (std::find(known_groups.begin(), known_groups.end(), g) == known_groups.end())
            throw DataError("unknown feature group: " + g);

    const auto &schema = extractor.schema();
    std::vector<int> unmasked;
    for (size_t c = 0; c < schema.size(); ++c) {
        bool masked = false;
        for (const auto &g : schema[c].groups)
            if (std::find(opt.masked_groups.begin(), opt.masked_groups.end(), g) !=
                opt.masked_groups.end()) {
                masked = true;
                break;
            }
        if (!masked) unmasked.push_back(static_cast<int>(c));
    }

    struct RawRecord {
        std::vector<std::vector<double>> rows;
        std::vector<double> wers;
    };
    std::vector<RawRecord> raw;
    int discarded = 0;
    for (const auto &rec : records) {
        if (!rec.has_reference) throw DataError("training record without a reference: " + rec.id);
        RawRecord r;
        r.rows = extractor.extract(rec);
        r.wers.reserve(rec.kbest.size());
        for (const auto &hyp : rec.kbest) r.wers.push_back(wer(hyp.words, rec.reference));
        bool spread = false;
        for (double v : r.wers)
            if (v != r.wers.front()) {
                spread = true;
                break;
            }
        if (!spread) {
            ++discarded;
            continue;
        }
        raw.push_back(std::move(r));
    }
    if (raw.empty()) throw DataError("no discriminative training signal: every record's hypotheses share one WER");

    size_t total_rows = 0;
    for (const auto &r : raw) total_rows += r.rows.size();
    std::vector<double> mean(unmasked.size(), 0.0), sd(unmasked.size(), 0.0);
    for (const auto &r : raw)
        for (const auto &row : r.rows)
            for (size_t j = 0; j < unmasked.size(); ++j) mean[j] += row[unmasked[j]];
    for (double &m : mean) m /= static_cast<double>(total_rows);
    for (const auto &r : raw)
        for (const auto &row : r.rows)
            for (size_t j = 0; j < unmasked.size(); ++j) {
                double d = row[unmasked[j]] - mean[j];
                sd[j] += d * d;
            }
    for (double &v : sd) v = std::sqrt(v / static_cast<double>(total_rows));

    RescorerModel model;
    model.masked_groups = opt.masked_groups;
    model.trained_with = opt;
    std::vector<int> columns;
    for (size_t j = 0; j < unmasked.size(); ++j) {
        if (sd[j] < kVarianceFloor) continue;
        columns.push_back(unmasked[j]);
        model.feature_names.push_back(schema[unmasked[j]].name);
        model.means.push_back(mean[j]);
        model.stddevs.push_back(sd[j]);
    }
    if (columns.empty())
        throw DataError("no usable features survive masking and variance filtering");
    const size_t dim = columns.size();

    std::vector<TrainRecord> train(raw.size());
    for (size_t r = 0; r < raw.size(); ++r) {
        train[r].wers = std::move(raw[r].wers);
        train[r].rows.resize(raw[r].rows.size(), std::vector<double>(dim));
        for (size_t i = 0; i < raw[r].rows.size(); ++i)
            for (size_t j = 0; j < dim; ++j)
                train[r].rows[i][j] =
                    (raw[r].rows[i][columns[j]] - model.means[j]) / model.stddevs[j];
    }

    std::vector<const TrainRecord *> all;
    all.reserve(train.size());
    for (const auto &t : train) all.push_back(&t);

    TrainResult result;
    result.discarded_records = discarded;
    std::vector<double> w(dim, 0.0), m1(dim, 0.0), m2(dim, 0.0);
    result.epoch_loss.push_back(mwer_loss(w, all).first);

    std::mt19937_64 rng(opt.seed);
    std::vector<int> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    int64_t step = 0;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        shuffle_indices(order, rng);
        for (size_t start = 0; start < order.size(); start += opt.batch_size) {
            std::vector<const TrainRecord *> batch;
            for (size_t i = start; i < order.size() && i < start + opt.batch_size; ++i)
                batch.push_back(&train[order[i]]);
            std::vector<double> grad = mwer_loss(w, batch).second;
            for (size_t j = 0; j < dim; ++j) grad[j] += 2.0 * opt.l2 * w[j];
            ++step;
            const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
            for (size_t j = 0; j < dim; ++j) {
                m1[j] = opt.beta1 * m1[j] + (1.0 - opt.beta1) * grad[j];
                m2[j] = opt.beta2 * m2[j] + (1.0 - opt.beta2) * grad[j] * grad[j];
                w[j] -= opt.learning_rate * (m1[j] / bc1) / (std::sqrt(m2[j] / bc2) + opt.adam_eps);
            }
        }
        result.epoch_loss.push_back(mwer_loss(w, all).first);
    }
    model.weights = std::move(w);
    result.model = std::move(model);
    return result;
}

std::vector<int> rescore(const RescorerModel &model, const FeatureExtractor &extractor,
                         const std::vector<UtteranceRecord> &records) {
    const std::vector<int> columns = model.column_map(extractor.schema());
    std::vector<int> picks;
    picks.reserve(records.size());
    std::vector<double> reduced(columns.size());
    for (const auto &rec : records) {
        const auto rows = extractor.extract(rec);
        int best = 0;
        double best_score = kLogZero;
        for (size_t i = 0; i < rows.size(); ++i) {
            for (size_t j = 0; j < columns.size(); ++j) reduced[j] = rows[i][columns[j]];
            double s = model.score(reduced);
            if (s > best_score) {
                best_score = s;
                best = static_cast<int>(i);
            }
        }
        picks.push_back(best);
    }
    return picks;
}

namespace {

nlohmann::ordered_json doubles_to_json(const std::vector<double> &xs) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (double x : xs) arr.push_back(fmt_sig(x, 17));
    return arr;
}

std::vector<double> doubles_from_json(const nlohmann::json &arr, const char *field) {
    if (!arr.is_array()) throw ParseError(std::string("model field is not an array: ") + field);
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto &v : arr) out.push_back(std::stod(v.get<std::string>()));
    return out;
}

}  // namespace

std::string serialize_model(const RescorerModel &model) {
    nlohmann::ordered_json j;
    j["schema"] = model.feature_names;
    j["weights"] = doubles_to_json(model.weights);
    j["standardization"] = {{"means", doubles_to_json(model.means)},
                            {"stddevs", doubles_to_json(model.stddevs)}};
    nlohmann::ordered_json cfg;
    cfg["masked_groups"] = model.masked_groups;
    cfg["learning_rate"] = fmt_sig(model.trained_with.learning_rate, 17);
    cfg["batch_size"] = model.trained_with.batch_size;
    cfg["epochs"] = model.trained_with.epochs;
    cfg["seed"] = model.trained_with.seed;
    cfg["l2"] = fmt_sig(model.trained_with.l2, 17);
    j["config"] = std::move(cfg);
    return j.dump(2) + "\n";
}

RescorerModel parse_model(const std::string &text) {
    RescorerModel model;
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        model.feature_names = j.at("schema").get<std::vector<std::string>>();
        model.weights = doubles_from_json(j.at("weights"), "weights");
        model.means = doubles_from_json(j.at("standardization").at("means"), "means");
        model.stddevs = doubles_from_json(j.at("standardization").at("stddevs"), "stddevs");
        const auto &cfg = j.at("config");
        model.masked_groups = cfg.at("masked_groups").get<std::vector<std::string>>();
        model.trained_with.learning_rate = std::stod(cfg.at("learning_rate").get<std::string>());
        model.trained_with.batch_size = cfg.at("batch_size").get<int>();
        model.trained_with.epochs = cfg.at("epochs").get<int>();
        model.trained_with.seed = cfg.at("seed").get<uint64_t>();
        model.trained_with.l2 = std::stod(cfg.at("l2").get<std::string>());
        model.trained_with.masked_groups = model.masked_groups;
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("model json: ") + e.what());
    }
    const size_t dim = model.feature_names.size();
    if (model.weights.size() != dim || model.means.size() != dim || model.stddevs.size() != dim)
        throw ParseError("model arrays disagree on the feature count");
    for (double s : model.stddevs)
        if (!(s > 0.0)) throw ParseError("model stddevs must be positive");
    return model;
}

void save_model(const RescorerModel &model, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path);
    out << serialize_model(model);
}

RescorerModel load_model(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read model file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

}  // namespace pcorr
