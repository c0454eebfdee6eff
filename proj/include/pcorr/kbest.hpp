#ifndef PCORR_KBEST_HPP
#define PCORR_KBEST_HPP

#include <string>
#include <vector>

#include "pcorr/decoder.hpp"
#include "pcorr/lexicon.hpp"

namespace pcorr {

enum class Source { kAsr, kPtt };

struct Hypothesis {
    WordSeq words;
    Source source = Source::kAsr;
    // Recognizer-assigned likelihood for ASR entries (used to pick the
    // observation when none is given); decoder path score for PTT entries.
    double acoustic_likelihood = 0.0;
    double ptt_logprob = 0.0;
};

// One utterance flowing through the pipeline. asr_nbest holds the
// recognizer output (element 0 is the top-1 h_*); kbest is filled by
// combine_kbest. reference is present on training/eval data only.
struct UtteranceRecord {
    std::string id;
    PhoneSeq obs;
    std::vector<Hypothesis> asr_nbest;
    std::vector<Hypothesis> kbest;
    WordSeq reference;
    bool has_reference = false;
};

// First n ASR hypotheses, then up to m PTT alternatives. PTT entries whose
// words duplicate a retained ASR entry are dropped without backfill, so the
// result can be shorter than n + m.
std::vector<Hypothesis> combine_kbest(const std::vector<Hypothesis> &asr_nbest,
                                      const std::vector<Alternative> &ptt_mbest, int n, int m);

// Word-level Levenshtein distance / max(1, |ref|), clamped to [0, 1].
double wer(const WordSeq &hyp, const WordSeq &ref);

// Best WER present in the list; 1.0 for an empty list.
double oracle_wer(const std::vector<Hypothesis> &kbest, const WordSeq &ref);

// JSON Lines exchange format. Each line holds one record: `id`, `obs`
// (space-separated phone labels), `asr_nbest` (array of {words,
// acoustic_likelihood}), optional `kbest` (array of {words, source, ...})
// and optional `reference`. Phones are validated against the inventory;
// words are case-folded.
std::vector<UtteranceRecord> parse_records(const std::string &text, const PhoneInventory &inv);
std::string serialize_records(const std::vector<UtteranceRecord> &recs,
                              const PhoneInventory &inv);
std::vector<UtteranceRecord> load_records(const std::string &path, const PhoneInventory &inv);
void save_records(const std::vector<UtteranceRecord> &recs, const PhoneInventory &inv,
                  const std::string &path);

}  // namespace pcorr

#endif  // PCORR_KBEST_HPP
