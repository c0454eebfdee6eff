#include "pcorr/phone_align.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pcorr {

NwAlignment nw_align(const PhoneSeq &observed, const PhoneSeq &reference, const NwCosts &costs) {
    const size_t n = observed.size();
    const size_t m = reference.size();
    std::vector<std::vector<double>> d(n + 1, std::vector<double>(m + 1, 0.0));
    for (size_t i = 1; i <= n; ++i) d[i][0] = static_cast<double>(i) * costs.gap;
    for (size_t j = 1; j <= m; ++j) d[0][j] = static_cast<double>(j) * costs.gap;
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            double diag = d[i - 1][j - 1] +
                          (observed[i - 1] == reference[j - 1] ? costs.match : costs.substitution);
            double del = d[i][j - 1] + costs.gap;
            double ins = d[i - 1][j] + costs.gap;
            d[i][j] = std::min({diag, del, ins});
        }
    }

    NwAlignment out;
    out.cost = d[n][m];
    size_t i = n, j = m;
    // Tie-break: diagonal first, then deletion, then insertion.
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0) {
            double step =
                observed[i - 1] == reference[j - 1] ? costs.match : costs.substitution;
            if (d[i][j] == d[i - 1][j - 1] + step) {
                out.pairs.push_back({observed[i - 1], reference[j - 1]});
                if (observed[i - 1] == reference[j - 1])
                    ++out.matches;
                else
                    ++out.substitutions;
                --i;
                --j;
                continue;
            }
        }
        if (j > 0 && d[i][j] == d[i][j - 1] + costs.gap) {
            out.pairs.push_back({PhoneInventory::kEps, reference[j - 1]});
            ++out.deletions;
            --j;
            continue;
        }
        out.pairs.push_back({observed[i - 1], PhoneInventory::kEps});
        ++out.insertions;
        --i;
    }
    std::reverse(out.pairs.begin(), out.pairs.end());
    return out;
}

void ConfusionCounts::add(const NwAlignment &a) {
    for (const auto &p : a.pairs) {
        counts[p.reference][p.observed] += 1;
        ++total_pairs;
    }
}

int64_t ConfusionCounts::insertion_pairs() const {
    int64_t n = 0;
    for (int64_t c : counts[PhoneInventory::kEps]) n += c;
    return n;
}

ConfusionModel::ConfusionModel(std::vector<std::string> phone_labels,
                               std::vector<std::vector<double>> emission, double p_ins)
    : labels_(std::move(phone_labels)), emission_(std::move(emission)), p_ins_(p_ins) {
    const size_t expect = labels_.size() + 1;
    if (emission_.size() != expect)
        throw DataError("confusion model emission matrix has wrong row count");
    for (const auto &row : emission_)
        if (row.size() != expect)
            throw DataError("confusion model emission matrix has wrong column count");
    if (p_ins_ < 0.0 || p_ins_ > 1.0) throw DataError("p_ins out of [0,1]");
}

int ConfusionModel::index_of(const std::string &label) const {
    if (label == PhoneInventory::kEpsLabel) return 0;
    for (size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label) return static_cast<int>(i) + 1;
    return -1;
}

bool ConfusionModel::operator==(const ConfusionModel &o) const {
    return labels_ == o.labels_ && emission_ == o.emission_ && p_ins_ == o.p_ins_;
}

ConfusionCounts accumulate_alignment_counts(
    const std::vector<std::pair<PhoneSeq, PhoneSeq>> &dev, int num_symbols) {
    ConfusionCounts counts(num_symbols);
    for (const auto &pair : dev) counts.add(nw_align(pair.first, pair.second));
    return counts;
}

namespace {

void floor_and_renormalize(std::vector<double> &row, int begin, int end) {
    double sum = 0.0;
    for (int i = begin; i < end; ++i) {
        if (row[i] < kEmissionFloor) row[i] = kEmissionFloor;
        sum += row[i];
    }
    for (int i = begin; i < end; ++i) row[i] /= sum;
}

}  // namespace

ConfusionModel estimate_from_counts(const ConfusionCounts &counts,
                                    const std::vector<std::string> &labels) {
    const int p = static_cast<int>(labels.size());
    if (static_cast<int>(counts.counts.size()) != p + 1)
        throw DataError("count table size does not match the label set");

    std::vector<std::vector<double>> emission(p + 1, std::vector<double>(p + 1, 0.0));

    // Insertion emission row P(o|eps): distribution over the real phones.
    {
        int64_t row_total = 0;
        for (int o = 1; o <= p; ++o) row_total += counts.counts[0][o];
        if (row_total > 0) {
            for (int o = 1; o <= p; ++o)
                emission[0][o] = static_cast<double>(counts.counts[0][o]) / row_total;
        }
        // Zero counts leave the row uniform after flooring.
        floor_and_renormalize(emission[0], 1, p + 1);
    }

    for (int r = 1; r <= p; ++r) {
        int64_t row_total = 0;
        for (int o = 0; o <= p; ++o) row_total += counts.counts[r][o];
        if (row_total > 0) {
            for (int o = 0; o <= p; ++o)
                emission[r][o] = static_cast<double>(counts.counts[r][o]) / row_total;
        } else {
            emission[r][r] = 1.0;  // identity-dominant default row
        }
        floor_and_renormalize(emission[r], 0, p + 1);
    }

    double p_ins = counts.total_pairs > 0
                       ? static_cast<double>(counts.insertion_pairs()) / counts.total_pairs
                       : 0.0;
    return ConfusionModel(labels, std::move(emission), p_ins);
}

ConfusionModel estimate_confusion(const std::vector<std::pair<PhoneSeq, PhoneSeq>> &dev,
                                  const PhoneInventory &inventory) {
    if (dev.empty()) throw DataError("confusion estimation needs a non-empty dev set");
    ConfusionCounts counts = accumulate_alignment_counts(dev, inventory.size());
    std::vector<std::string> labels;
    labels.reserve(inventory.num_phones());
    for (PhoneId p = 1; p < inventory.size(); ++p) labels.push_back(inventory.label(p));
    return estimate_from_counts(counts, labels);
}

double channel_logprob(const ConfusionModel &cm, const PhoneSeq &observed,
                       const PhoneSeq &reference) {
    const size_t n = observed.size();
    const size_t m = reference.size();
    const double log_ins = std::log(cm.p_ins());
    const double log_no_ins = std::log(1.0 - cm.p_ins());

    std::vector<std::vector<double>> g(n + 1, std::vector<double>(m + 1, kLogZero));
    g[0][0] = 0.0;
    for (size_t i = 1; i <= n; ++i)
        g[i][0] = g[i - 1][0] + log_ins + std::log(cm.emission(observed[i - 1], 0));
    for (size_t j = 1; j <= m; ++j)
        g[0][j] = g[0][j - 1] + log_no_ins + std::log(cm.emission(0, reference[j - 1]));
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            double diag = g[i - 1][j - 1] + log_no_ins +
                          std::log(cm.emission(observed[i - 1], reference[j - 1]));
            double del = g[i][j - 1] + log_no_ins + std::log(cm.emission(0, reference[j - 1]));
            double ins = g[i - 1][j] + log_ins + std::log(cm.emission(observed[i - 1], 0));
            g[i][j] = std::max({diag, del, ins});
        }
    }
    return g[n][m];
}

PhoneSeq encode_for(const ConfusionModel &cm, const PhoneInventory &inv, const PhoneSeq &seq) {
    PhoneSeq out;
    out.reserve(seq.size());
    for (PhoneId p : seq) {
        int idx = cm.index_of(inv.label(p));
        if (idx < 0) throw DataError("phone not covered by the confusion model: " + inv.label(p));
        out.push_back(idx);
    }
    return out;
}

std::string serialize_confusion(const ConfusionModel &cm) {
    nlohmann::ordered_json j;
    j["inventory"] = cm.phone_labels();
    j["p_ins"] = fmt_sig(cm.p_ins(), 12);
    nlohmann::ordered_json emission;
    const int p = cm.num_phones();
    auto row_name = [&](int r) {
        return r == 0 ? std::string(PhoneInventory::kEpsLabel) : cm.phone_labels()[r - 1];
    };
    for (int r = 0; r <= p; ++r) {
        nlohmann::ordered_json row;
        for (int o = 0; o <= p; ++o) {
            if (r == 0 && o == 0) continue;
            row[row_name(o)] = fmt_sig(cm.emission(o, r), 12);
        }
        emission[row_name(r)] = std::move(row);
    }
    j["emission"] = std::move(emission);
    return j.dump(2) + "\n";
}

ConfusionModel parse_confusion(const std::string &text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<std::string> labels = j.at("inventory").get<std::vector<std::string>>();
    const int p = static_cast<int>(labels.size());
    double p_ins = std::stod(j.at("p_ins").get<std::string>());
    std::vector<std::vector<double>> emission(p + 1, std::vector<double>(p + 1, 0.0));
    auto index_of = [&](const std::string &name) {
        if (name == PhoneInventory::kEpsLabel) return 0;
        for (int i = 0; i < p; ++i)
            if (labels[i] == name) return i + 1;
        throw DataError("confusion file references unknown phone: " + name);
    };
    for (const auto &[row_name, row] : j.at("emission").items()) {
        int r = index_of(row_name);
        for (const auto &[col_name, cell] : row.items()) {
            int o = index_of(col_name);
            emission[r][o] = std::stod(cell.template get<std::string>());
        }
    }
    return ConfusionModel(std::move(labels), std::move(emission), p_ins);
}

void save_confusion(const ConfusionModel &cm, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write confusion file: " + path);
    out << serialize_confusion(cm);
}

ConfusionModel load_confusion(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open confusion file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_confusion(ss.str());
}

}  // namespace pcorr
