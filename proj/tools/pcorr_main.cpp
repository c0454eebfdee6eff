// Command-line front end: one executable, one subcommand per pipeline stage.
// Exit codes: 0 success, 1 usage error, 2 data error. The resolved
// configuration of every run goes to stderr so stdout stays clean for data.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcorr/decoder.hpp"
#include "pcorr/features.hpp"
#include "pcorr/graph.hpp"
#include "pcorr/kbest.hpp"
#include "pcorr/lexicon.hpp"
#include "pcorr/ngram_lm.hpp"
#include "pcorr/phone_align.hpp"
#include "pcorr/rescorer.hpp"
#include "pcorr/sim.hpp"

namespace {

using namespace pcorr;

constexpr const char *kOutDirEnv = "PCORR_OUT_DIR";

// Output paths default into $PCORR_OUT_DIR when one is set and the path is
// bare (no directory component).
std::string resolve_out(const std::string &path) {
    if (path.empty() || path.find('/') != std::string::npos) return path;
    const char *dir = std::getenv(kOutDirEnv);
    if (dir == nullptr || *dir == '\0') return path;
    return std::string(dir) + "/" + path;
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string &path, const std::string &bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    out << bytes;
}

void log_config(const std::string &sub, const std::vector<std::pair<std::string, std::string>> &kv) {
    std::string line = "config " + sub;
    for (const auto &[k, v] : kv) line += " " + k + "=" + v;
    std::fprintf(stderr, "%s\n", line.c_str());
}

std::vector<WordSeq> read_corpus(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read: " + path);
    std::vector<WordSeq> corpus;
    std::string line;
    while (std::getline(in, line)) {
        WordSeq sent = split_ws(line);
        if (!sent.empty()) corpus.push_back(std::move(sent));
    }
    return corpus;
}

// Aligned dev pairs, one per line: observed phones, a tab, reference phones.
std::vector<std::pair<PhoneSeq, PhoneSeq>> read_pairs(const std::string &path,
                                                      const PhoneInventory &inv) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read: " + path);
    std::vector<std::pair<PhoneSeq, PhoneSeq>> pairs;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(path + " line " + std::to_string(ln) +
                            ": expected observed<TAB>reference");
        try {
            pairs.emplace_back(inv.encode(split_ws(line.substr(0, tab))),
                               inv.encode(split_ws(line.substr(tab + 1))));
        } catch (const std::exception &e) {
            throw DataError(path + " line " + std::to_string(ln) + ": " + e.what());
        }
    }
    return pairs;
}

NGramLM load_lm(const std::string &path) {
    try {
        return NGramLM::load(path);
    } catch (const ParseError &e) {
        throw DataError(path + ": " + e.what());
    }
}

Lexicon load_lex(const std::string &path) {
    try {
        return load_lexicon(path);
    } catch (const ParseError &e) {
        throw DataError(path + ": " + e.what());
    }
}

std::vector<UtteranceRecord> load_records_checked(const std::string &path,
                                                  const PhoneInventory &inv) {
    try {
        return load_records(path, inv);
    } catch (const ParseError &e) {
        throw DataError(path + ": " + e.what());
    }
}

struct LexiconValidateArgs {
    std::string lexicon;
};

int run_lexicon_validate(const LexiconValidateArgs &a) {
    log_config("lexicon validate", {{"lexicon", a.lexicon}});
    Lexicon lex = load_lex(a.lexicon);
    size_t variants = 0;
    for (const auto &w : lex.words()) variants += lex.pronunciations(w).size();
    std::printf("words %zu\nentries %zu\nphones %d\n", lex.num_words(), variants,
                lex.inventory().num_phones());
    return 0;
}

struct LmTrainArgs {
    std::string corpus;
    std::string out;
    int order = 3;
};

int run_lm_train(const LmTrainArgs &a) {
    std::string out = resolve_out(a.out);
    log_config("lm train",
               {{"corpus", a.corpus}, {"order", std::to_string(a.order)}, {"out", out}});
    NGramLM lm = train_ngram(read_corpus(a.corpus), a.order);
    lm.save(out);
    std::printf("vocab %zu\norder %d\n", lm.vocab().size(), lm.order());
    return 0;
}

struct LmScoreArgs {
    std::string lm;
    std::string corpus;
    int order_cap = 0;
};

int run_lm_score(const LmScoreArgs &a) {
    log_config("lm score",
               {{"lm", a.lm}, {"input", a.corpus}, {"order_cap", std::to_string(a.order_cap)}});
    NGramLM lm = load_lm(a.lm);
    double total = 0.0;
    for (const WordSeq &sent : read_corpus(a.corpus)) {
        double lp = lm.sequence_logprob(sent, a.order_cap);
        total += lp;
        std::printf("%.6f\t%s\n", lp, join(sent).c_str());
    }
    std::printf("total %.6f\n", total);
    return 0;
}

struct ConfusionEstimateArgs {
    std::string lexicon;
    std::string pairs;
    std::string out;
};

int run_confusion_estimate(const ConfusionEstimateArgs &a) {
    std::string out = resolve_out(a.out);
    log_config("confusion estimate", {{"lexicon", a.lexicon}, {"pairs", a.pairs}, {"out", out}});
    Lexicon lex = load_lex(a.lexicon);
    auto dev = read_pairs(a.pairs, lex.inventory());
    ConfusionModel cm = estimate_confusion(dev, lex.inventory());
    save_confusion(cm, out);
    std::printf("pairs %zu\nphones %d\np_ins %s\n", dev.size(), cm.num_phones(),
                fmt_sig(cm.p_ins(), 12).c_str());
    return 0;
}

struct ConfusionApplyArgs {
    std::string confusion;
    std::string lexicon;
    std::string pairs;
};

// Scores each observed/reference pair under the channel: the best-alignment
// log probability that the reference was spoken and came out as observed.
int run_confusion_apply(const ConfusionApplyArgs &a) {
    log_config("confusion apply",
               {{"confusion", a.confusion}, {"lexicon", a.lexicon}, {"pairs", a.pairs}});
    Lexicon lex = load_lex(a.lexicon);
    ConfusionModel cm = load_confusion(a.confusion);
    for (const auto &[obs, ref] : read_pairs(a.pairs, lex.inventory())) {
        double lp = channel_logprob(cm, encode_for(cm, lex.inventory(), obs),
                                    encode_for(cm, lex.inventory(), ref));
        std::printf("%.6f\t%s\t%s\n", lp, lex.inventory().decode(obs).c_str(),
                    lex.inventory().decode(ref).c_str());
    }
    return 0;
}

struct GraphArgs {
    std::string lexicon;
    std::string lm;
    std::string vocab;
    std::string out;
    int order = 2;
};

DecodingGraph build_graph_from(const GraphArgs &a) {
    Lexicon lex = load_lex(a.lexicon);
    NGramLM lm = load_lm(a.lm);
    GraphOptions opt;
    opt.order = a.order;
    if (!a.vocab.empty()) {
        for (const WordSeq &line : read_corpus(a.vocab))
            for (const std::string &w : line) opt.vocabulary.push_back(fold_word(w));
        std::sort(opt.vocabulary.begin(), opt.vocabulary.end());
        opt.vocabulary.erase(std::unique(opt.vocabulary.begin(), opt.vocabulary.end()),
                             opt.vocabulary.end());
    }
    return build_graph(lex, lm, opt);
}

int run_graph_build(const GraphArgs &a) {
    log_config("graph build", {{"lexicon", a.lexicon},
                               {"lm", a.lm},
                               {"vocab", a.vocab.empty() ? "-" : a.vocab},
                               {"order", std::to_string(a.order)}});
    DecodingGraph g = build_graph_from(a);
    std::printf("nodes %d\ncontexts %d\narcs %zu\nwords %zu\n", g.num_nodes, g.context_count,
                g.arcs.size(), g.output_words.size());
    return 0;
}

int run_graph_dump(const GraphArgs &a) {
    std::string out = resolve_out(a.out);
    log_config("graph dump", {{"lexicon", a.lexicon},
                              {"lm", a.lm},
                              {"vocab", a.vocab.empty() ? "-" : a.vocab},
                              {"order", std::to_string(a.order)},
                              {"out", out.empty() ? "-" : out}});
    DecodingGraph g = build_graph_from(a);
    std::string text = dump_graph(g);
    if (out.empty())
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        write_file(out, text);
    return 0;
}

struct PttDecodeArgs {
    std::string lexicon;
    std::string lm;
    std::string confusion;
    std::string vocab;
    std::string input;
    std::string out;
    int order = 2;
    int beam = 15;
    int m = 10;
    int n = 1;
    int max_consecutive_deletions = 2;
    int max_active = DecodeOptions::kNoLimit;
    double score_window = DecodeOptions::kNoWindow;
    int jobs = 1;
};

int run_ptt_decode(const PttDecodeArgs &a) {
    std::string out = resolve_out(a.out);
    log_config("ptt decode", {{"lexicon", a.lexicon},
                              {"lm", a.lm},
                              {"confusion", a.confusion},
                              {"input", a.input},
                              {"out", out},
                              {"order", std::to_string(a.order)},
                              {"beam", std::to_string(a.beam)},
                              {"m", std::to_string(a.m)},
                              {"n", std::to_string(a.n)},
                              {"jobs", std::to_string(a.jobs)}});
    Lexicon lex = load_lex(a.lexicon);
    ConfusionModel cm = load_confusion(a.confusion);
    GraphArgs ga{a.lexicon, a.lm, a.vocab, "", a.order};
    DecodingGraph graph = build_graph_from(ga);
    std::vector<UtteranceRecord> recs = load_records_checked(a.input, lex.inventory());
    DecodeOptions opt;
    opt.beam = a.beam;
    opt.m = a.m;
    opt.max_consecutive_deletions = a.max_consecutive_deletions;
    opt.max_active = a.max_active;
    opt.score_window = a.score_window;
    parallel_for(static_cast<int>(recs.size()), a.jobs, [&](int i) {
        UtteranceRecord &rec = recs[i];
        std::vector<Alternative> ptt = decode_mbest(graph, cm, rec.obs, opt);
        rec.kbest = combine_kbest(rec.asr_nbest, ptt, a.n, a.m);
    });
    save_records(recs, lex.inventory(), out);
    std::printf("records %zu\n", recs.size());
    return 0;
}

// The component LMs of a feature extractor, loaded from repeated --lm flags.
struct ComponentLms {
    std::vector<NGramLM> storage;
    std::vector<const NGramLM *> pointers;

    explicit ComponentLms(const std::vector<std::string> &paths) {
        storage.reserve(paths.size());
        for (const auto &p : paths) storage.push_back(load_lm(p));
        for (const auto &lm : storage) pointers.push_back(&lm);
    }
};

struct RescoreTrainArgs {
    std::string lexicon;
    std::string confusion;
    std::vector<std::string> lms;
    std::string input;
    std::string out;
    std::vector<std::string> masks;
    TrainOptions opt;
};

int run_rescore_train(const RescoreTrainArgs &a) {
    std::string out = resolve_out(a.out);
    log_config("rescore train", {{"lexicon", a.lexicon},
                                 {"confusion", a.confusion},
                                 {"lms", std::to_string(a.lms.size())},
                                 {"input", a.input},
                                 {"out", out},
                                 {"masks", a.masks.empty() ? "-" : join(a.masks, ",")},
                                 {"epochs", std::to_string(a.opt.epochs)},
                                 {"seed", std::to_string(a.opt.seed)}});
    Lexicon lex = load_lex(a.lexicon);
    ConfusionModel cm = load_confusion(a.confusion);
    ComponentLms lms(a.lms);
    FeatureExtractor fx(lex, cm, lms.pointers);
    std::vector<UtteranceRecord> recs = load_records_checked(a.input, lex.inventory());
    TrainOptions opt = a.opt;
    opt.masked_groups = a.masks;
    TrainResult tr = train_mwer(fx, recs, opt);
    save_model(tr.model, out);
    std::printf("records %zu\ndiscarded %d\ninitial_loss %s\nfinal_loss %s\n", recs.size(),
                tr.discarded_records, fmt_sig(tr.epoch_loss.front(), 12).c_str(),
                fmt_sig(tr.epoch_loss.back(), 12).c_str());
    return 0;
}

struct RescoreApplyArgs {
    std::string lexicon;
    std::string confusion;
    std::vector<std::string> lms;
    std::string model;
    std::string input;
    std::string out;
};

int run_rescore_apply(const RescoreApplyArgs &a) {
    std::string out = resolve_out(a.out);
    log_config("rescore apply", {{"lexicon", a.lexicon},
                                 {"confusion", a.confusion},
                                 {"lms", std::to_string(a.lms.size())},
                                 {"model", a.model},
                                 {"input", a.input},
                                 {"out", out}});
    Lexicon lex = load_lex(a.lexicon);
    ConfusionModel cm = load_confusion(a.confusion);
    ComponentLms lms(a.lms);
    FeatureExtractor fx(lex, cm, lms.pointers);
    RescorerModel model = load_model(a.model);
    std::vector<UtteranceRecord> recs = load_records_checked(a.input, lex.inventory());
    std::vector<int> picks = rescore(model, fx, recs);
    // Output: one line per record with the chosen hypothesis.
    std::string text;
    for (size_t i = 0; i < recs.size(); ++i) {
        text += recs[i].id + "\t" + std::to_string(picks[i]) + "\t" +
                join(recs[i].kbest[static_cast<size_t>(picks[i])].words) + "\n";
    }
    if (out.empty())
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        write_file(out, text);
    return 0;
}

struct RescoreAblateArgs {
    std::string lexicon;
    std::string confusion;
    std::vector<std::string> lms;
    std::string train_input;
    std::string eval_input;
    TrainOptions opt;
};

// Trains the full model plus one model per feature-group mask on the same
// records and reports corrected WER of each on the evaluation set.
int run_rescore_ablate(const RescoreAblateArgs &a) {
    log_config("rescore ablate", {{"lexicon", a.lexicon},
                                  {"confusion", a.confusion},
                                  {"lms", std::to_string(a.lms.size())},
                                  {"train", a.train_input},
                                  {"eval", a.eval_input}});
    Lexicon lex = load_lex(a.lexicon);
    ConfusionModel cm = load_confusion(a.confusion);
    ComponentLms lms(a.lms);
    FeatureExtractor fx(lex, cm, lms.pointers);
    std::vector<UtteranceRecord> train = load_records_checked(a.train_input, lex.inventory());
    std::vector<UtteranceRecord> eval = load_records_checked(a.eval_input, lex.inventory());
    for (const auto &rec : eval)
        if (!rec.has_reference) throw DataError("evaluation record lacks a reference: " + rec.id);

    auto corrected = [&](const std::vector<std::string> &masks) {
        TrainOptions opt = a.opt;
        opt.masked_groups = masks;
        TrainResult tr = train_mwer(fx, train, opt);
        std::vector<int> picks = rescore(tr.model, fx, eval);
        double sum = 0.0;
        for (size_t i = 0; i < eval.size(); ++i)
            sum += wer(eval[i].kbest[static_cast<size_t>(picks[i])].words, eval[i].reference);
        return sum / static_cast<double>(eval.size());
    };

    std::printf("%-18s %14s\n", "mask", "corrected-wer");
    std::printf("%-18s %14.4f\n", "none", corrected({}));
    for (const std::string &g : FeatureExtractor::group_names())
        std::printf("%-18s %14.4f\n", ("no_" + g).c_str(), corrected({g}));
    std::printf("%-18s %14.4f\n", "no_lm", corrected({"interp_lm", "component_lm"}));
    return 0;
}

struct EvaluateArgs {
    std::string lexicon;
    std::string input;
    std::string hyp;
    std::string ref;
    std::string picks;
};

// Two modes: plain text (--hyp/--ref, one utterance per line) or record JSONL
// (baseline/oracle WER, plus corrected WER when --picks is given).
int run_evaluate(const EvaluateArgs &a) {
    const bool text_mode = !a.hyp.empty() || !a.ref.empty();
    log_config("evaluate", {{"lexicon", a.lexicon.empty() ? "-" : a.lexicon},
                            {"input", a.input.empty() ? "-" : a.input},
                            {"hyp", a.hyp.empty() ? "-" : a.hyp},
                            {"ref", a.ref.empty() ? "-" : a.ref},
                            {"picks", a.picks.empty() ? "-" : a.picks}});
    if (text_mode) {
        if (a.hyp.empty() || a.ref.empty()) throw DataError("--hyp and --ref go together");
        std::vector<WordSeq> hyps = read_corpus(a.hyp);
        std::vector<WordSeq> refs = read_corpus(a.ref);
        if (hyps.size() != refs.size())
            throw DataError("hypothesis/reference line counts differ: " +
                            std::to_string(hyps.size()) + " vs " + std::to_string(refs.size()));
        if (hyps.empty()) throw DataError("no utterances to evaluate");
        double sum = 0.0;
        for (size_t i = 0; i < hyps.size(); ++i) sum += wer(hyps[i], refs[i]);
        std::printf("utterances %zu\nwer %.4f\n", hyps.size(),
                    sum / static_cast<double>(hyps.size()));
        return 0;
    }
    if (a.lexicon.empty() || a.input.empty())
        throw DataError("record mode needs --lexicon and an input file");
    Lexicon lex = load_lex(a.lexicon);
    std::vector<UtteranceRecord> recs = load_records_checked(a.input, lex.inventory());
    if (recs.empty()) throw DataError("no records to evaluate");
    std::vector<int> picks;
    if (!a.picks.empty()) {
        std::ifstream in(a.picks, std::ios::binary);
        if (!in) throw DataError("cannot read: " + a.picks);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            WordSeq f = split_ws(line);
            if (f.size() < 2) throw DataError(a.picks + ": expected id<TAB>pick lines");
            picks.push_back(std::stoi(f[1]));
        }
        if (picks.size() != recs.size())
            throw DataError("picks/records count mismatch: " + std::to_string(picks.size()) +
                            " vs " + std::to_string(recs.size()));
    }
    double base = 0.0, oracle = 0.0, corrected = 0.0;
    for (size_t i = 0; i < recs.size(); ++i) {
        const UtteranceRecord &rec = recs[i];
        if (!rec.has_reference) throw DataError("record lacks a reference: " + rec.id);
        if (rec.asr_nbest.empty() && rec.kbest.empty())
            throw DataError("record has no hypotheses: " + rec.id);
        const WordSeq &top =
            rec.asr_nbest.empty() ? rec.kbest.front().words : rec.asr_nbest.front().words;
        base += wer(top, rec.reference);
        oracle += oracle_wer(rec.kbest.empty() ? rec.asr_nbest : rec.kbest, rec.reference);
        if (!picks.empty()) {
            int p = picks[i];
            if (p < 0 || p >= static_cast<int>(rec.kbest.size()))
                throw DataError("pick out of range for record: " + rec.id);
            corrected += wer(rec.kbest[static_cast<size_t>(p)].words, rec.reference);
        }
    }
    const double n = static_cast<double>(recs.size());
    std::printf("utterances %zu\nbaseline_wer %.4f\noracle_wer %.4f\n", recs.size(), base / n,
                oracle / n);
    if (!picks.empty()) std::printf("corrected_wer %.4f\n", corrected / n);
    return 0;
}

struct SimulateArgs {
    std::string out;
    std::string config;
    uint64_t seed = 1;
    int jobs = 1;
};

int run_simulate(const SimulateArgs &a) {
    std::string out = resolve_out(a.out);
    ScenarioConfig cfg;
    if (!a.config.empty()) cfg = parse_config(read_file(a.config));
    cfg.seed = a.seed;
    log_config("simulate", {{"seed", std::to_string(cfg.seed)},
                            {"config", a.config.empty() ? "-" : a.config},
                            {"out", out.empty() ? "-" : out},
                            {"jobs", std::to_string(a.jobs)},
                            {"hash", config_hash(cfg)}});
    BenchmarkReport report = run_benchmark(cfg, out, a.jobs);
    std::string table = format_report_table(report);
    std::fwrite(table.data(), 1, table.size(), stdout);
    std::fprintf(stderr, "runtime %.2fs\n", report.runtime_seconds);
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"phonetic error correction pipeline"};
    app.require_subcommand(1);

    LexiconValidateArgs lexv;
    auto *lexicon = app.add_subcommand("lexicon", "lexicon utilities")->require_subcommand(1);
    auto *lex_validate = lexicon->add_subcommand("validate", "parse and summarize a lexicon");
    lex_validate->add_option("lexicon", lexv.lexicon, "lexicon file")->required();

    LmTrainArgs lmt;
    LmScoreArgs lms;
    auto *lm = app.add_subcommand("lm", "n-gram language models")->require_subcommand(1);
    auto *lm_train = lm->add_subcommand("train", "train a backoff model");
    lm_train->add_option("corpus", lmt.corpus, "training corpus, one sentence per line")
        ->required();
    lm_train->add_option("--order", lmt.order, "model order");
    lm_train->add_option("--out", lmt.out, "output ARPA file")->required();
    auto *lm_score = lm->add_subcommand("score", "log10 sentence probabilities");
    lm_score->add_option("--lm", lms.lm, "ARPA model file")->required();
    lm_score->add_option("input", lms.corpus, "sentences, one per line")->required();
    lm_score->add_option("--order-cap", lms.order_cap, "evaluate at reduced order");

    ConfusionEstimateArgs cest;
    ConfusionApplyArgs capp;
    auto *confusion = app.add_subcommand("confusion", "phone confusion model")
                          ->require_subcommand(1);
    auto *conf_est = confusion->add_subcommand("estimate", "estimate from aligned dev pairs");
    conf_est->add_option("--lexicon", cest.lexicon, "lexicon file")->required();
    conf_est->add_option("pairs", cest.pairs, "observed<TAB>reference phone lines")->required();
    conf_est->add_option("--out", cest.out, "output confusion JSON")->required();
    auto *conf_apply = confusion->add_subcommand("apply", "channel log-probabilities of pairs");
    conf_apply->add_option("--confusion", capp.confusion, "confusion JSON")->required();
    conf_apply->add_option("--lexicon", capp.lexicon, "lexicon file")->required();
    conf_apply->add_option("pairs", capp.pairs, "observed<TAB>reference phone lines")->required();

    GraphArgs gb, gd;
    auto *graph = app.add_subcommand("graph", "decoding graph")->require_subcommand(1);
    auto *graph_build = graph->add_subcommand("build", "build and summarize");
    graph_build->add_option("--lexicon", gb.lexicon, "lexicon file")->required();
    graph_build->add_option("--lm", gb.lm, "ARPA model file")->required();
    graph_build->add_option("--vocab", gb.vocab, "restrict outputs to these words");
    graph_build->add_option("--order", gb.order, "context order");
    auto *graph_dump = graph->add_subcommand("dump", "arc-level text dump");
    graph_dump->add_option("--lexicon", gd.lexicon, "lexicon file")->required();
    graph_dump->add_option("--lm", gd.lm, "ARPA model file")->required();
    graph_dump->add_option("--vocab", gd.vocab, "restrict outputs to these words");
    graph_dump->add_option("--order", gd.order, "context order");
    graph_dump->add_option("--out", gd.out, "output file (stdout when omitted)");

    PttDecodeArgs pd;
    auto *ptt = app.add_subcommand("ptt", "phone-to-text search")->require_subcommand(1);
    auto *ptt_decode = ptt->add_subcommand("decode", "augment records with PTT alternatives");
    ptt_decode->add_option("--lexicon", pd.lexicon, "lexicon file")->required();
    ptt_decode->add_option("--lm", pd.lm, "ARPA model file")->required();
    ptt_decode->add_option("--confusion", pd.confusion, "confusion JSON")->required();
    ptt_decode->add_option("--vocab", pd.vocab, "restrict graph outputs to these words");
    ptt_decode->add_option("input", pd.input, "UtteranceRecord JSONL")->required();
    ptt_decode->add_option("--out", pd.out, "output JSONL")->required();
    ptt_decode->add_option("--order", pd.order, "graph context order");
    ptt_decode->add_option("--beam", pd.beam, "per-node beam width");
    ptt_decode->add_option("--m", pd.m, "PTT alternatives kept");
    ptt_decode->add_option("--n", pd.n, "recognizer hypotheses kept");
    ptt_decode->add_option("--max-consecutive-deletions", pd.max_consecutive_deletions,
                           "deletion run cap");
    ptt_decode->add_option("--max-active", pd.max_active, "global active-state cap");
    ptt_decode->add_option("--score-window", pd.score_window, "prune below best minus this");
    ptt_decode->add_option("--jobs", pd.jobs, "worker threads");

    RescoreTrainArgs rt;
    RescoreApplyArgs ra;
    RescoreAblateArgs rab;
    auto *rescore_cmd = app.add_subcommand("rescore", "discriminative rescorer")
                            ->require_subcommand(1);
    auto *rs_train = rescore_cmd->add_subcommand("train", "fit rescorer weights");
    rs_train->add_option("--lexicon", rt.lexicon, "lexicon file")->required();
    rs_train->add_option("--confusion", rt.confusion, "confusion JSON")->required();
    rs_train->add_option("--lm", rt.lms, "component LM (repeatable)")->required()->type_size(1)->allow_extra_args(false);
    rs_train->add_option("input", rt.input, "training records JSONL")->required();
    rs_train->add_option("--out", rt.out, "output model JSON")->required();
    rs_train->add_option("--mask", rt.masks, "feature group to zero (repeatable)")->type_size(1)->allow_extra_args(false);
    rs_train->add_option("--epochs", rt.opt.epochs, "training epochs");
    rs_train->add_option("--batch-size", rt.opt.batch_size, "mini-batch size");
    rs_train->add_option("--learning-rate", rt.opt.learning_rate, "Adam step size");
    rs_train->add_option("--l2", rt.opt.l2, "L2 penalty");
    rs_train->add_option("--seed", rt.opt.seed, "shuffle seed");
    auto *rs_apply = rescore_cmd->add_subcommand("apply", "pick hypotheses with a model");
    rs_apply->add_option("--lexicon", ra.lexicon, "lexicon file")->required();
    rs_apply->add_option("--confusion", ra.confusion, "confusion JSON")->required();
    rs_apply->add_option("--lm", ra.lms, "component LM (repeatable)")->required()->type_size(1)->allow_extra_args(false);
    rs_apply->add_option("--model", ra.model, "model JSON")->required();
    rs_apply->add_option("input", ra.input, "records JSONL")->required();
    rs_apply->add_option("--out", ra.out, "picks TSV (stdout when omitted)");
    auto *rs_ablate = rescore_cmd->add_subcommand("ablate", "feature-group ablation table");
    rs_ablate->add_option("--lexicon", rab.lexicon, "lexicon file")->required();
    rs_ablate->add_option("--confusion", rab.confusion, "confusion JSON")->required();
    rs_ablate->add_option("--lm", rab.lms, "component LM (repeatable)")->required()->type_size(1)->allow_extra_args(false);
    rs_ablate->add_option("train", rab.train_input, "training records JSONL")->required();
    rs_ablate->add_option("eval", rab.eval_input, "evaluation records JSONL")->required();
    rs_ablate->add_option("--epochs", rab.opt.epochs, "training epochs");
    rs_ablate->add_option("--seed", rab.opt.seed, "shuffle seed");

    EvaluateArgs ev;
    auto *evaluate = app.add_subcommand("evaluate", "WER report");
    evaluate->add_option("--lexicon", ev.lexicon, "lexicon file (record mode)");
    evaluate->add_option("input", ev.input, "records JSONL (record mode)");
    evaluate->add_option("--hyp", ev.hyp, "hypothesis text file (text mode)");
    evaluate->add_option("--ref", ev.ref, "reference text file (text mode)");
    evaluate->add_option("--picks", ev.picks, "picks TSV from rescore apply");

    SimulateArgs sim;
    auto *simulate = app.add_subcommand("simulate", "synthetic end-to-end benchmark");
    simulate->add_option("--seed", sim.seed, "scenario seed");
    simulate->add_option("--config", sim.config, "scenario config JSON");
    simulate->add_option("--out", sim.out, "artifact directory");
    simulate->add_option("--jobs", sim.jobs, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (lex_validate->parsed()) return run_lexicon_validate(lexv);
        if (lm_train->parsed()) return run_lm_train(lmt);
        if (lm_score->parsed()) return run_lm_score(lms);
        if (conf_est->parsed()) return run_confusion_estimate(cest);
        if (conf_apply->parsed()) return run_confusion_apply(capp);
        if (graph_build->parsed()) return run_graph_build(gb);
        if (graph_dump->parsed()) return run_graph_dump(gd);
        if (ptt_decode->parsed()) return run_ptt_decode(pd);
        if (rs_train->parsed()) return run_rescore_train(rt);
        if (rs_apply->parsed()) return run_rescore_apply(ra);
        if (rs_ablate->parsed()) return run_rescore_ablate(rab);
        if (evaluate->parsed()) return run_evaluate(ev);
        if (simulate->parsed()) return run_simulate(sim);
    } catch (const DataError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ParseError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
