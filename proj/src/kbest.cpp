#include "pcorr/kbest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pcorr {

using json = nlohmann::ordered_json;

std::vector<Hypothesis> combine_kbest(const std::vector<Hypothesis> &asr_nbest,
                                      const std::vector<Alternative> &ptt_mbest, int n, int m) {
    if (asr_nbest.empty()) throw DataError("recognizer n-best is empty");
    std::vector<Hypothesis> out;
    std::set<WordSeq> seen;
    for (size_t i = 0; i < asr_nbest.size() && i < static_cast<size_t>(n); ++i) {
        out.push_back(asr_nbest[i]);
        out.back().source = Source::kAsr;
        seen.insert(out.back().words);
    }
    int taken = 0;
    for (const Alternative &alt : ptt_mbest) {
        if (taken >= m) break;
        ++taken;  // a duplicate consumes its slot; no backfill
        if (seen.count(alt.words)) continue;
        Hypothesis h;
        h.words = alt.words;
        h.source = Source::kPtt;
        h.ptt_logprob = alt.logprob;
        seen.insert(h.words);
        out.push_back(std::move(h));
    }
    return out;
}

double wer(const WordSeq &hyp, const WordSeq &ref) {
    size_t n = hyp.size(), m = ref.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            int sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    double raw = static_cast<double>(prev[m]) / static_cast<double>(std::max<size_t>(1, m));
    return std::min(1.0, std::max(0.0, raw));
}

double oracle_wer(const std::vector<Hypothesis> &kbest, const WordSeq &ref) {
    double best = 1.0;
    for (const Hypothesis &h : kbest) best = std::min(best, wer(h.words, ref));
    return best;
}

namespace {

WordSeq fold_words(const std::string &text) {
    WordSeq out;
    for (const std::string &w : split_ws(text)) out.push_back(fold_word(w));
    return out;
}

PhoneSeq parse_phones(const std::string &text, const PhoneInventory &inv, int lineno) {
    PhoneSeq seq;
    for (const std::string &tok : split_ws(text)) {
        PhoneId p = inv.find(tok);
        if (p <= 0) throw ParseError("unknown phone \"" + tok + "\"", lineno);
        seq.push_back(p);
    }
    return seq;
}

Hypothesis parse_hypothesis(const json &j, int lineno) {
    Hypothesis h;
    if (!j.contains("words") || !j["words"].is_string())
        throw ParseError("hypothesis without a words string", lineno);
    h.words = fold_words(j["words"].get<std::string>());
    if (j.contains("source")) {
        std::string s = j["source"].get<std::string>();
        if (s == "asr")
            h.source = Source::kAsr;
        else if (s == "ptt")
            h.source = Source::kPtt;
        else
            throw ParseError("bad hypothesis source \"" + s + "\"", lineno);
    }
    if (j.contains("acoustic_likelihood"))
        h.acoustic_likelihood = j["acoustic_likelihood"].get<double>();
    if (j.contains("logprob")) h.ptt_logprob = j["logprob"].get<double>();
    return h;
}

json dump_hypothesis(const Hypothesis &h, bool kbest_entry) {
    json j;
    j["words"] = join(h.words);
    if (kbest_entry) j["source"] = h.source == Source::kAsr ? "asr" : "ptt";
    if (h.source == Source::kAsr)
        j["acoustic_likelihood"] = h.acoustic_likelihood;
    else
        j["logprob"] = h.ptt_logprob;
    return j;
}

}  // namespace

std::vector<UtteranceRecord> parse_records(const std::string &text, const PhoneInventory &inv) {
    std::vector<UtteranceRecord> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception &e) {
            throw ParseError(std::string("bad JSON record: ") + e.what(), lineno);
        }
        UtteranceRecord rec;
        if (!j.contains("id")) throw ParseError("record without id", lineno);
        rec.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        if (j.contains("obs")) rec.obs = parse_phones(j["obs"].get<std::string>(), inv, lineno);
        if (!j.contains("asr_nbest") || !j["asr_nbest"].is_array() || j["asr_nbest"].empty())
            throw ParseError("record without a non-empty asr_nbest", lineno);
        for (const json &h : j["asr_nbest"]) rec.asr_nbest.push_back(parse_hypothesis(h, lineno));
        if (j.contains("kbest"))
            for (const json &h : j["kbest"]) rec.kbest.push_back(parse_hypothesis(h, lineno));
        if (j.contains("reference")) {
            rec.reference = fold_words(j["reference"].get<std::string>());
            rec.has_reference = true;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string serialize_records(const std::vector<UtteranceRecord> &recs,
                              const PhoneInventory &inv) {
    std::string out;
    for (const UtteranceRecord &rec : recs) {
        json j;
        j["id"] = rec.id;
        j["obs"] = inv.decode(rec.obs);
        j["asr_nbest"] = json::array();
        for (const Hypothesis &h : rec.asr_nbest)
            j["asr_nbest"].push_back(dump_hypothesis(h, false));
        if (!rec.kbest.empty()) {
            j["kbest"] = json::array();
            for (const Hypothesis &h : rec.kbest) j["kbest"].push_back(dump_hypothesis(h, true));
        }
        if (rec.has_reference) j["reference"] = join(rec.reference);
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<UtteranceRecord> load_records(const std::string &path, const PhoneInventory &inv) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_records(buf.str(), inv);
}

void save_records(const std::vector<UtteranceRecord> &recs, const PhoneInventory &inv,
                  const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << serialize_records(recs, inv);
}

}  // namespace pcorr
