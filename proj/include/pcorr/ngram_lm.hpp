#ifndef PCORR_NGRAM_LM_HPP
#define PCORR_NGRAM_LM_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "pcorr/common.hpp"

namespace pcorr {

// Word-based backoff n-gram language model with Witten-Bell smoothing.
// Log values are log10, matching the ARPA text format. Immutable once
// trained or loaded.
class NGramLM {
 public:
    static constexpr const char *kSentBegin = "<s>";
    static constexpr const char *kSentEnd = "</s>";
    static constexpr const char *kUnk = "<unk>";

    int order() const { return order_; }

    // True if word (after case folding) is a vocabulary entry, markers and
    // <unk> included.
    bool has_word(const std::string &word) const;

    // All unigram entries in sorted order.
    std::vector<std::string> vocab() const;

    // log10 P(word | history). The history holds the most recent word last
    // and may be empty or contain <s>. OOV tokens map to <unk>. A nonzero
    // order_cap evaluates the model as if its order were min(order, cap).
    double cond_logprob(const std::string &word, const std::vector<std::string> &history,
                        int order_cap = 0) const;

    // log10 P(w_1..w_n </s> | <s>): conditional scores for every word plus the
    // sentence-end emission.
    double sequence_logprob(const WordSeq &words, int order_cap = 0) const;

    // All listed n-grams of length <= max_len usable as LM contexts (i.e. not
    // containing </s>), the empty context included, in sorted order.
    std::vector<std::vector<std::string>> listed_contexts(int max_len) const;

    // Longest suffix of ctx (capped to max_len tokens) that is a listed
    // context; possibly empty. Transition targets in the decoding graph are
    // computed with this, which keeps graph paths exactly equal to
    // sequence_logprob scores for suffix-closed models such as ours.
    std::vector<std::string> listed_suffix(const std::vector<std::string> &ctx,
                                           int max_len) const;

    std::string to_arpa() const;
    static NGramLM from_arpa(const std::string &text);
    void save(const std::string &path) const;
    static NGramLM load(const std::string &path);

    // Testing hook: conditional mass summed over the whole vocabulary except
    // <s>; 1.0 for a properly normalized model.
    double context_probability_mass(const std::vector<std::string> &context) const;

 private:
    friend NGramLM train_ngram(const std::vector<WordSeq> &, int);

    struct Entry {
        double logp = 0.0;
        double bow = 0.0;
        bool has_bow = false;
    };

    int token_id(const std::string &token) const;  // -1 if absent
    int intern(const std::string &token);
    std::string key_of(const int *ids, int len) const;
    const Entry *find(const std::string &key, int len) const;
    double cond_logprob_ids(int word, std::vector<int> history) const;

    int order_ = 0;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> token_index_;
    // tables_[n-1]: n-gram key -> entry. Keys are the packed token ids.
    std::vector<std::unordered_map<std::string, Entry>> tables_;
};

// Trains a Witten-Bell backoff model of the given order (1..5) on the corpus
// sentences. Words are case-folded; <unk> receives the unseen-word mass.
NGramLM train_ngram(const std::vector<WordSeq> &corpus, int order);

struct InterpolationWeights {
    std::vector<double> values;
    void validate() const;
};

// Mixture weights maximizing the joint likelihood of the hypothesis
// sequences, fitted by EM on whole-sequence probabilities. Per-iteration
// likelihood is non-decreasing; stops early when the improvement drops
// below 1e-10. ll_trace, when given, receives the likelihood after each
// iteration (used by tests to check monotonicity).
InterpolationWeights em_interpolation_weights(const std::vector<const NGramLM *> &components,
                                              const std::vector<WordSeq> &hyps, int iters,
                                              std::vector<double> *ll_trace = nullptr);

// log10 sum_k w_k P_k(words), evaluated stably in log space.
double interpolated_logprob(const std::vector<const NGramLM *> &components,
                            const InterpolationWeights &weights, const WordSeq &words);

}  // namespace pcorr

#endif  // PCORR_NGRAM_LM_HPP
