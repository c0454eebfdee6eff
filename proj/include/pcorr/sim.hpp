#ifndef PCORR_SIM_HPP
#define PCORR_SIM_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcorr/decoder.hpp"
#include "pcorr/graph.hpp"
#include "pcorr/kbest.hpp"
#include "pcorr/ngram_lm.hpp"
#include "pcorr/rescorer.hpp"

namespace pcorr {

// Counter-based generator: every (seed, stream) pair is an independent
// deterministic sequence, so per-utterance streams stay reproducible no
// matter how work is ordered or parallelized.
class Rng {
 public:
    Rng(uint64_t seed, uint64_t stream);
    uint64_t next();
    double uniform();            // [0, 1)
    uint32_t below(uint32_t n);  // [0, n)

 private:
    uint64_t state_;
};

// Deterministic toy pronunciation rules: words are concatenations of
// two-letter consonant-vowel syllables, each mapping to a fixed phone pair.
struct SyllableRule {
    std::string letters;
    std::string consonant_phone;
    std::string vowel_phone;
};
const std::vector<SyllableRule> &g2p_table();
// Phones of one listed syllable; throws DataError for an unlisted one.
std::vector<std::string> g2p_syllable(const std::string &syllable);
// Phones of a whole word (a chain of listed syllables).
std::vector<std::string> g2p_word(const std::string &word);

struct ChannelRates {
    double sub = 0.06;
    double del = 0.04;
    double ins = 0.02;
};

// The generating channel: per-phone corruption rates plus the phone
// alphabet substitutions and insertions draw from.
struct TrueChannel {
    ChannelRates rates;
    std::vector<PhoneId> alphabet;
};

struct CorruptCounts {
    int64_t keeps = 0;
    int64_t subs = 0;
    int64_t dels = 0;
    int64_t inss = 0;
    int64_t gaps = 0;
    int64_t total_pairs() const { return keeps + subs + dels + inss; }
};

// Passes phones through the noisy channel: per phone an optional uniform
// substitution or a deletion, plus at most one uniform insertion per gap
// (the n+1 positions between and around the phones).
PhoneSeq corrupt(const TrueChannel &channel, const PhoneSeq &phones, Rng &rng,
                 CorruptCounts *counts = nullptr);

struct ScenarioConfig {
    uint64_t seed = 1;
    int head_words = 120;
    int tail_entities = 40;
    int snapshot_entities = 40;
    // Entities that entered the catalog after the recognizer's snapshot but
    // before rescorer training. Disjoint from the test tail; they give the
    // trainer utterances where the recognizer cannot know the entity.
    int fresh_train_entities = 40;
    double zipf_exponent = 1.0;
    ChannelRates rates;
    int lm_train_sentences = 4000;
    int entity_lm_sentences = 3000;
    int confusion_dev_utterances = 6500;
    int rescorer_train_utterances = 360;
    int test_head_utterances = 240;
    int test_tail_utterances = 60;
    int lm_order = 3;
    int graph_order = 2;
    int asr_nbest = 5;  // width of the simulated recognizer's output list
    int n = 1;          // recognizer hypotheses kept in the combined list
    DecodeOptions decode;
    TrainOptions train;

    ScenarioConfig() {
        decode.beam = 15;
        decode.m = 10;
        decode.max_consecutive_deletions = 2;
        decode.max_active = 1500;
        decode.score_window = 10.0;
    }
    void validate() const;
};

std::string serialize_config(const ScenarioConfig &cfg);
ScenarioConfig parse_config(const std::string &text);
// FNV-1a over the serialized config, as 16 hex digits.
std::string config_hash(const ScenarioConfig &cfg);

// Synthetic world: a pronunciation lexicon over generated words, a stale
// corpus that has never seen the tail entities, and a fresh entity-query
// corpus that includes them. Entity constituent syllables double as
// standalone filler words, so a stale system can (and does) transcribe an
// unknown entity as its syllable sequence.
struct Scenario {
    Lexicon lexicon;
    std::vector<std::string> head_vocab;  // head words, sorted
    std::vector<std::string> filler_vocab;
    std::vector<std::string> carriers;
    std::vector<std::string> snapshot_entities;
    std::vector<std::string> fresh_train_entities;
    std::vector<std::string> tail_entities;
    std::vector<WordSeq> stale_corpus;
    std::vector<WordSeq> entity_corpus;
    TrueChannel channel;
};

Scenario generate_scenario(const ScenarioConfig &cfg);

// Reference pronunciation with variant choices drawn from rng, matching how
// an utterance would actually have been spoken.
PhoneSeq spoken_pronunciation(const Lexicon &lex, const WordSeq &words, Rng &rng);

// Stale-system recognition: decodes obs against the stale graph and scores
// each hypothesis' pronunciation against obs through the channel as a
// pseudo acoustic likelihood. Empty when the decode yields nothing.
std::vector<Hypothesis> simulate_asr(const DecodingGraph &stale, const ConfusionModel &cm,
                                     const Lexicon &lex, const PhoneSeq &obs,
                                     const DecodeOptions &opt);

struct SetMetrics {
    int utterances = 0;
    int excluded = 0;  // empty stale decodes, dropped with their references
    double baseline_wer = 0.0;
    double corrected_wer = 0.0;
    double oracle_wer = 0.0;      // over the combined list
    double asr_oracle_wer = 0.0;  // over the retained recognizer entries only
    double rel_reduction = 0.0;   // (baseline - corrected) / baseline
};

struct AblationResult {
    std::string name;
    std::vector<std::string> masked_groups;
    double head_corrected_wer = 0.0;
    double tail_corrected_wer = 0.0;
};

struct ChannelRecovery {
    double true_p_ins = 0.0;
    double estimated_p_ins = 0.0;
    double true_diag_mass = 0.0;  // 1 - sub - del
    double estimated_diag_mass = 0.0;
};

struct BenchmarkReport {
    std::string hash;
    ChannelRecovery channel;
    SetMetrics head;
    SetMetrics tail;
    std::vector<AblationResult> ablations;
    int train_records = 0;
    int train_excluded = 0;
    int train_discarded = 0;  // no error-rate spread
    double final_train_loss = 0.0;
    // Wall-clock time; reported on stderr and deliberately left out of the
    // serialized report so identical configs give identical bytes.
    double runtime_seconds = 0.0;
};

// Canonical report bytes (runtime excluded) and the human-readable table.
std::string serialize_report(const BenchmarkReport &report);
std::string format_report_table(const BenchmarkReport &report);

// Acceptance thresholds recorded in every manifest.
constexpr double kTailRelReductionMin = 0.03;
constexpr double kHeadRelDegradationMax = 0.01;

// Full pipeline: generate, estimate the channel from a held-out aligned dev
// split, train both LMs, build stale and fresh graphs, decode, train the
// rescorer, evaluate head and tail sets, then re-train under each ablation
// mask. With a non-empty out_dir every artifact (lexicon, ARPA models,
// confusion, rescorer, record sets, report, manifest) is written there.
BenchmarkReport run_benchmark(const ScenarioConfig &cfg, const std::string &out_dir = "",
                              int jobs = 1);

// Runs f(0..n-1) on `jobs` threads; each index writes only its own slot in
// the caller's output, so results never depend on scheduling.
void parallel_for(int n, int jobs, const std::function<void(int)> &f);

}  // namespace pcorr

#endif  // PCORR_SIM_HPP
