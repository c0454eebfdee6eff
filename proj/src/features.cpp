#include "pcorr/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pcorr {

namespace {

// A channel-impossible pair (p_ins = 0 against a longer observation) scores
// -inf; cap the corresponding cost so list statistics stay finite.
constexpr double kImpossibleCost = 1e9;

double finite_cost(double neg_logprob) { return std::min(neg_logprob, kImpossibleCost); }

}  // namespace

PhoneSeq pronounce_or_unk(const Lexicon &lex, const WordSeq &words, const ConfusionModel *cm,
                          const PhoneSeq *obs) {
    bool all_known = true;
    for (const auto &word : words)
        if (!lex.contains(word)) {
            all_known = false;
            break;
        }
    if (all_known)
        return pronounce(lex, words,
                         cm != nullptr && obs != nullptr ? VariantPolicy::kMinChannelCost
                                                         : VariantPolicy::kFirstListed,
                         cm, obs);

    std::vector<PhoneSeq> unk_variant;
    std::vector<const std::vector<PhoneSeq> *> variants;
    variants.reserve(words.size());
    size_t combos = 1;
    for (const auto &word : words) {
        if (lex.contains(word)) {
            variants.push_back(&lex.pronunciations(word));
        } else {
            if (unk_variant.empty()) {
                PhoneId unk = lex.inventory().find(kUnkPhoneLabel);
                if (unk <= 0)
                    throw DataError(std::string("inventory lacks ") + kUnkPhoneLabel +
                                    ", needed to pronounce out-of-lexicon word: " + word);
                unk_variant.push_back(PhoneSeq{unk});
            }
            variants.push_back(&unk_variant);
        }
        combos *= variants.back()->size();
    }

    auto concat = [&](const std::vector<size_t> &choice) {
        PhoneSeq out;
        for (size_t i = 0; i < variants.size(); ++i) {
            const PhoneSeq &v = (*variants[i])[choice[i]];
            out.insert(out.end(), v.begin(), v.end());
        }
        return out;
    };

    std::vector<size_t> choice(words.size(), 0);
    if (cm == nullptr || obs == nullptr || combos <= 1) return concat(choice);

    std::vector<size_t> best = choice;
    double best_score = kLogZero;
    for (;;) {
        double s = channel_logprob(*cm, *obs, concat(choice));
        if (s > best_score) {
            best_score = s;
            best = choice;
        }
        size_t i = 0;
        while (i < choice.size() && ++choice[i] == variants[i]->size()) {
            choice[i] = 0;
            ++i;
        }
        if (i == choice.size()) break;
    }
    return concat(best);
}

std::vector<double> zscore(const std::vector<double> &values) {
    std::vector<double> z(values.size(), 0.0);
    if (values.empty()) return z;
    const double n = static_cast<double>(values.size());
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / n);
    if (sd < 1e-12) return z;
    for (size_t i = 0; i < values.size(); ++i) z[i] = (values[i] - mean) / sd;
    return z;
}

std::pair<double, double> ChannelAcousticCost::cost(const WordSeq &, const PhoneSeq &phones,
                                                    const PhoneSeq &obs) const {
    return {finite_cost(-channel_logprob(cm_, obs, phones)), static_cast<double>(phones.size())};
}

const std::vector<std::string> &FeatureExtractor::group_names() {
    static const std::vector<std::string> names = {"phonetic", "acoustic", "interp_lm",
                                                   "component_lm", "other"};
    return names;
}

FeatureExtractor::FeatureExtractor(const Lexicon &lex, const ConfusionModel &cm,
                                   std::vector<const NGramLM *> components,
                                   const AcousticCostProvider *acoustic, FeatureConfig cfg)
    : lex_(lex),
      cm_(cm),
      components_(std::move(components)),
      acoustic_(acoustic),
      default_acoustic_(cm, lex.inventory()),
      cfg_(cfg) {
    if (components_.empty()) throw DataError("feature extraction needs at least one language model");
    for (const NGramLM *c : components_)
        if (c == nullptr) throw DataError("null language model component");
    // Channel scores are computed on inventory-encoded sequences, so the
    // model's phone order must coincide with the inventory's.
    for (PhoneId p = 1; p < lex_.inventory().size(); ++p)
        if (cm_.index_of(lex_.inventory().label(p)) != p)
            throw DataError("confusion model phones do not line up with the lexicon inventory");

    auto base = [&](const std::string &name, const std::string &group, bool continuous) {
        schema_.push_back({name, {group}, continuous});
    };
    base("cphon_ismin", "phonetic", false);
    base("plen_dmin", "phonetic", true);
    base("plen_dmax", "phonetic", true);
    for (const char *stem : {"cac", "ilm"}) {
        const std::string group = stem[0] == 'c' ? "acoustic" : "interp_lm";
        base(std::string(stem) + "_dmin", group, true);
        base(std::string(stem) + "_dmax", group, true);
        base(std::string(stem) + "_eq", group, false);
        base(std::string(stem) + "_lt", group, false);
        base(std::string(stem) + "_gt", group, false);
        base(std::string(stem) + "_zmin", group, true);
        base(std::string(stem) + "_zmax", group, true);
    }
    for (size_t c = 0; c < components_.size(); ++c) {
        const std::string stem = "clm" + std::to_string(c + 1);
        base(stem + "_zmin", "component_lm", true);
        base(stem + "_zmax", "component_lm", true);
        base(stem + "_lt", "component_lm", false);
        base(stem + "_gt", "component_lm", false);
    }
    base("src_asr", "other", false);
    base("src_ptt", "other", false);
    base_count_ = static_cast<int>(schema_.size());

    // Pairwise products of the continuous transformed features.
    std::vector<int> continuous;
    for (int i = 0; i < base_count_; ++i)
        if (schema_[i].continuous) continuous.push_back(i);
    for (size_t a = 0; a < continuous.size(); ++a)
        for (size_t b = a + 1; b < continuous.size(); ++b) {
            const FeatureDef &fa = schema_[continuous[a]];
            const FeatureDef &fb = schema_[continuous[b]];
            std::vector<std::string> groups = fa.groups;
            for (const auto &g : fb.groups)
                if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
            schema_.push_back({fa.name + "*" + fb.name, std::move(groups), true});
            composites_.emplace_back(continuous[a], continuous[b]);
        }
}

std::vector<std::vector<double>> FeatureExtractor::extract(const UtteranceRecord &rec) const {
    const size_t k = rec.kbest.size();
    if (k == 0) throw DataError("record " + rec.id + " has an empty combined hypothesis list");
    const ConfusionModel *cm = rec.obs.empty() ? nullptr : &cm_;
    const PhoneSeq *obs = rec.obs.empty() ? nullptr : &rec.obs;

    std::vector<PhoneSeq> phones(k);
    std::vector<WordSeq> seqs(k);
    for (size_t i = 0; i < k; ++i) {
        seqs[i] = rec.kbest[i].words;
        phones[i] = pronounce_or_unk(lex_, seqs[i], cm, obs);
    }

    const AcousticCostProvider &provider = acoustic_ != nullptr ? *acoustic_ : default_acoustic_;
    const size_t ncomp = components_.size();
    std::vector<double> cphon(k), plen(k), cac(k), ilm(k);
    std::vector<std::vector<double>> clm(ncomp, std::vector<double>(k));
    for (size_t i = 0; i < k; ++i) {
        cphon[i] = finite_cost(-channel_logprob(cm_, phones[0], phones[i]));
        auto [cost, length] = provider.cost(seqs[i], phones[i], rec.obs);
        cac[i] = cost;
        plen[i] = length;
        for (size_t c = 0; c < ncomp; ++c) clm[c][i] = components_[c]->sequence_logprob(seqs[i]);
    }
    InterpolationWeights weights = em_interpolation_weights(components_, seqs, cfg_.em_iters);
    for (size_t i = 0; i < k; ++i) ilm[i] = interpolated_logprob(components_, weights, seqs[i]);

    std::vector<std::vector<double>> rows(k, std::vector<double>(schema_.size(), 0.0));
    int col = 0;
    auto emit_t1 = [&](const std::vector<double> &f) {
        double mn = *std::min_element(f.begin(), f.end());
        for (size_t i = 0; i < k; ++i) rows[i][col] = f[i] <= mn + cfg_.eq_tolerance ? 1.0 : 0.0;
        ++col;
    };
    auto emit_t2 = [&](const std::vector<double> &f) {
        for (size_t i = 0; i < k; ++i) {
            double d = f[i] - f[0];
            rows[i][col] = std::min(0.0, d);
            rows[i][col + 1] = std::max(0.0, d);
        }
        col += 2;
    };
    auto emit_t3 = [&](const std::vector<double> &f) {
        for (size_t i = 0; i < k; ++i) {
            double d = f[i] - f[0];
            rows[i][col] = std::fabs(d) <= cfg_.eq_tolerance ? 1.0 : 0.0;
            rows[i][col + 1] = d < -cfg_.eq_tolerance ? 1.0 : 0.0;
            rows[i][col + 2] = d > cfg_.eq_tolerance ? 1.0 : 0.0;
        }
        col += 3;
    };
    auto emit_t4 = [&](const std::vector<double> &f) {
        std::vector<double> z = zscore(f);
        for (size_t i = 0; i < k; ++i) {
            rows[i][col] = std::min(0.0, z[i]);
            rows[i][col + 1] = std::max(0.0, z[i]);
        }
        col += 2;
    };
    auto emit_t5 = [&](const std::vector<double> &f) {
        double mx = *std::max_element(f.begin(), f.end());
        double lt = mx < cfg_.t5_threshold ? 1.0 : 0.0;
        double gt = mx > cfg_.t5_threshold ? 1.0 : 0.0;
        for (size_t i = 0; i < k; ++i) {
            rows[i][col] = lt;
            rows[i][col + 1] = gt;
        }
        col += 2;
    };

    emit_t1(cphon);
    emit_t2(plen);
    emit_t2(cac);
    emit_t3(cac);
    emit_t4(cac);
    emit_t2(ilm);
    emit_t3(ilm);
    emit_t4(ilm);
    for (size_t c = 0; c < ncomp; ++c) {
        emit_t4(clm[c]);
        emit_t5(clm[c]);
    }
    for (size_t i = 0; i < k; ++i) {
        rows[i][col] = rec.kbest[i].source == Source::kAsr ? 1.0 : 0.0;
        rows[i][col + 1] = rec.kbest[i].source == Source::kPtt ? 1.0 : 0.0;
    }
    col += 2;
    if (col != base_count_) throw std::logic_error("feature layout drifted from the schema");

    for (const auto &[a, b] : composites_) {
        for (size_t i = 0; i < k; ++i) rows[i][col] = rows[i][a] * rows[i][b];
        ++col;
    }
    return rows;
}

}  // namespace pcorr
