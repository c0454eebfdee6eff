#include "pcorr/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace pcorr {

namespace {

// Packed token-id key for the n-gram hash tables.
std::string pack_ids(const int *ids, int len) {
    std::string key(static_cast<size_t>(len) * sizeof(int), '\0');
    std::memcpy(&key[0], ids, key.size());
    return key;
}

std::vector<int> unpack_ids(const std::string &key) {
    std::vector<int> ids(key.size() / sizeof(int));
    std::memcpy(ids.data(), key.data(), key.size());
    return ids;
}

}  // namespace

int NGramLM::token_id(const std::string &token) const {
    auto it = token_index_.find(token);
    return it == token_index_.end() ? -1 : it->second;
}

int NGramLM::intern(const std::string &token) {
    auto it = token_index_.find(token);
    if (it != token_index_.end()) return it->second;
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    token_index_.emplace(token, id);
    return id;
}

std::string NGramLM::key_of(const int *ids, int len) const { return pack_ids(ids, len); }

const NGramLM::Entry *NGramLM::find(const std::string &key, int len) const {
    if (len < 1 || len > static_cast<int>(tables_.size())) return nullptr;
    const auto &table = tables_[static_cast<size_t>(len) - 1];
    auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
}

bool NGramLM::has_word(const std::string &word) const {
    return token_id(fold_word(word)) >= 0;
}

std::vector<std::string> NGramLM::vocab() const {
    std::vector<std::string> out = tokens_;
    std::sort(out.begin(), out.end());
    return out;
}

double NGramLM::cond_logprob_ids(int word, std::vector<int> history) const {
    double acc = 0.0;
    for (;;) {
        std::vector<int> gram = history;
        gram.push_back(word);
        if (const Entry *e = find(pack_ids(gram.data(), static_cast<int>(gram.size())),
                                  static_cast<int>(gram.size())))
            return acc + e->logp;
        if (history.empty()) return kLogZero;  // word not even unigram-listed
        const Entry *ctx = find(pack_ids(history.data(), static_cast<int>(history.size())),
                                static_cast<int>(history.size()));
        if (ctx && ctx->has_bow) acc += ctx->bow;
        history.erase(history.begin());
    }
}

double NGramLM::cond_logprob(const std::string &word, const std::vector<std::string> &history,
                             int order_cap) const {
    int eff = order_;
    if (order_cap > 0 && order_cap < eff) eff = order_cap;
    int keep = eff - 1;
    int unk = token_id(kUnk);

    int w = token_id(fold_word(word));
    if (w < 0) w = unk;
    if (w < 0) return kLogZero;

    std::vector<int> hist;
    size_t start = history.size() > static_cast<size_t>(keep) ? history.size() - keep : 0;
    for (size_t i = start; i < history.size(); ++i) {
        int id = token_id(fold_word(history[i]));
        hist.push_back(id >= 0 ? id : unk);
    }
    return cond_logprob_ids(w, std::move(hist));
}

double NGramLM::sequence_logprob(const WordSeq &words, int order_cap) const {
    std::vector<std::string> history{kSentBegin};
    double total = 0.0;
    for (const std::string &w : words) {
        total += cond_logprob(w, history, order_cap);
        history.push_back(fold_word(w));
    }
    total += cond_logprob(kSentEnd, history, order_cap);
    return total;
}

std::vector<std::vector<std::string>> NGramLM::listed_contexts(int max_len) const {
    std::vector<std::vector<std::string>> out;
    out.emplace_back();  // empty context is always usable
    int eos = token_id(kSentEnd);
    int top = std::min<int>(max_len, static_cast<int>(tables_.size()));
    for (int n = 1; n <= top; ++n) {
        for (const auto &kv : tables_[static_cast<size_t>(n) - 1]) {
            std::vector<int> ids = unpack_ids(kv.first);
            if (std::find(ids.begin(), ids.end(), eos) != ids.end()) continue;
            std::vector<std::string> ctx;
            ctx.reserve(ids.size());
            for (int id : ids) ctx.push_back(tokens_[static_cast<size_t>(id)]);
            out.push_back(std::move(ctx));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> NGramLM::listed_suffix(const std::vector<std::string> &ctx,
                                                int max_len) const {
    int top = std::min<int>(max_len, static_cast<int>(ctx.size()));
    top = std::min<int>(top, static_cast<int>(tables_.size()));
    for (int len = top; len >= 1; --len) {
        std::vector<int> ids;
        bool ok = true;
        for (size_t i = ctx.size() - len; i < ctx.size(); ++i) {
            int id = token_id(fold_word(ctx[i]));
            if (id < 0 || ctx[i] == kSentEnd) {
                ok = false;
                break;
            }
            ids.push_back(id);
        }
        if (!ok) continue;
        if (find(pack_ids(ids.data(), len), len))
            return {ctx.end() - len, ctx.end()};
    }
    return {};
}

double NGramLM::context_probability_mass(const std::vector<std::string> &context) const {
    double mass = 0.0;
    for (const std::string &w : vocab()) {
        if (w == kSentBegin) continue;
        mass += std::pow(10.0, cond_logprob(w, context));
    }
    return mass;
}

NGramLM train_ngram(const std::vector<WordSeq> &corpus, int order) {
    if (order < 1 || order > 5) throw DataError("n-gram order must be in [1, 5]");
    if (corpus.empty()) throw DataError("empty training corpus");

    NGramLM lm;
    lm.order_ = order;
    int bos = lm.intern(NGramLM::kSentBegin);
    int eos = lm.intern(NGramLM::kSentEnd);
    int unk = lm.intern(NGramLM::kUnk);
    (void)unk;

    std::vector<std::unordered_map<std::string, int64_t>> counts(static_cast<size_t>(order));
    for (const WordSeq &sentence : corpus) {
        std::vector<int> padded{bos};
        for (const std::string &w : sentence) padded.push_back(lm.intern(fold_word(w)));
        padded.push_back(eos);
        for (size_t i = 1; i < padded.size(); ++i) {
            for (int n = 1; n <= order; ++n) {
                int start = static_cast<int>(i) - n + 1;
                if (start < 0) continue;
                ++counts[static_cast<size_t>(n) - 1][pack_ids(&padded[static_cast<size_t>(start)], n)];
            }
        }
    }
    if (counts[0].empty()) throw DataError("empty training corpus");

    lm.tables_.assign(static_cast<size_t>(order), {});

    // Unigram level: Witten-Bell over the event vocabulary plus <unk>. <s> is
    // never an event; it is listed with the conventional -99 placeholder.
    int64_t total_events = 0;
    for (const auto &kv : counts[0]) total_events += kv.second;
    double t1 = static_cast<double>(counts[0].size());
    double vsize = t1 + 1.0;  // + <unk>
    double denom = static_cast<double>(total_events) + t1;
    double uniform = 1.0 / vsize;
    for (const auto &kv : counts[0]) {
        NGramLM::Entry e;
        e.logp = std::log10((static_cast<double>(kv.second) + t1 * uniform) / denom);
        lm.tables_[0].emplace(kv.first, e);
    }
    {
        NGramLM::Entry e;
        e.logp = std::log10(t1 * uniform / denom);
        lm.tables_[0].emplace(pack_ids(&unk, 1), e);
        NGramLM::Entry s;
        s.logp = -99.0;
        lm.tables_[0].emplace(pack_ids(&bos, 1), s);
    }

    // Higher levels. Context statistics come from the level's own count
    // table: c(h) = sum of continuation counts, T(h) = continuation types.
    for (int n = 2; n <= order; ++n) {
        const auto &grams = counts[static_cast<size_t>(n) - 1];
        std::unordered_map<std::string, int64_t> ctx_count;
        std::unordered_map<std::string, int64_t> ctx_types;
        for (const auto &kv : grams) {
            std::string prefix = kv.first.substr(0, kv.first.size() - sizeof(int));
            ctx_count[prefix] += kv.second;
            ctx_types[prefix] += 1;
        }
        for (const auto &kv : ctx_count) {
            double c = static_cast<double>(kv.second);
            double t = static_cast<double>(ctx_types[kv.first]);
            auto &table = lm.tables_[static_cast<size_t>(n) - 2];
            auto it = table.find(kv.first);
            if (it == table.end()) throw std::logic_error("context without an n-gram entry");
            it->second.bow = std::log10(t / (c + t));
            it->second.has_bow = true;
        }
        for (const auto &kv : grams) {
            std::vector<int> ids = unpack_ids(kv.first);
            std::vector<int> lower(ids.begin() + 1, ids.end() - 1);
            double plower =
                std::pow(10.0, lm.cond_logprob_ids(ids.back(), std::move(lower)));
            std::string prefix = kv.first.substr(0, kv.first.size() - sizeof(int));
            double c = static_cast<double>(ctx_count[prefix]);
            double t = static_cast<double>(ctx_types[prefix]);
            NGramLM::Entry e;
            e.logp = std::log10((static_cast<double>(kv.second) + t * plower) / (c + t));
            lm.tables_[static_cast<size_t>(n) - 1].emplace(kv.first, e);
        }
    }
    return lm;
}

std::string NGramLM::to_arpa() const {
    std::ostringstream out;
    out << "\\data\\\n";
    for (int n = 1; n <= order_; ++n)
        out << "ngram " << n << "=" << tables_[static_cast<size_t>(n) - 1].size() << "\n";
    for (int n = 1; n <= order_; ++n) {
        std::vector<std::pair<std::vector<std::string>, const Entry *>> rows;
        rows.reserve(tables_[static_cast<size_t>(n) - 1].size());
        for (const auto &kv : tables_[static_cast<size_t>(n) - 1]) {
            std::vector<int> ids = unpack_ids(kv.first);
            std::vector<std::string> words;
            words.reserve(ids.size());
            for (int id : ids) words.push_back(tokens_[static_cast<size_t>(id)]);
            rows.emplace_back(std::move(words), &kv.second);
        }
        std::sort(rows.begin(), rows.end(),
                  [](const auto &a, const auto &b) { return a.first < b.first; });
        out << "\n\\" << n << "-grams:\n";
        for (const auto &row : rows) {
            out << fmt_sig(row.second->logp, 12) << "\t" << join(row.first);
            if (row.second->has_bow) out << "\t" << fmt_sig(row.second->bow, 12);
            out << "\n";
        }
    }
    out << "\n\\end\\\n";
    return out.str();
}

NGramLM NGramLM::from_arpa(const std::string &text) {
    NGramLM lm;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<size_t> declared;

    auto next_content = [&](std::string &s) {
        while (std::getline(in, s)) {
            ++lineno;
            if (!s.empty() && s.back() == '\r') s.pop_back();
            if (!split_ws(s).empty()) return true;
        }
        return false;
    };

    if (!next_content(line) || split_ws(line)[0] != "\\data\\")
        throw ParseError("expected \\data\\ header", lineno);
    while (next_content(line)) {
        if (line.rfind("\\", 0) == 0) break;  // first \N-grams: section
        auto fields = split_ws(line);
        size_t eq = fields.size() == 2 ? fields[1].find('=') : std::string::npos;
        if (fields.size() != 2 || fields[0] != "ngram" || eq == std::string::npos)
            throw ParseError("bad ngram count line: " + line, lineno);
        int n = std::stoi(fields[1].substr(0, eq));
        if (n != static_cast<int>(declared.size()) + 1)
            throw ParseError("ngram counts out of order", lineno);
        declared.push_back(std::stoul(fields[1].substr(eq + 1)));
    }
    if (declared.empty()) throw ParseError("no ngram counts in \\data\\ section", lineno);
    lm.order_ = static_cast<int>(declared.size());
    lm.tables_.assign(declared.size(), {});

    int section = 0;  // current n
    for (;;) {
        if (line.rfind("\\end\\", 0) == 0) break;
        std::string expect = "\\" + std::to_string(section + 1) + "-grams:";
        if (line != expect) throw ParseError("expected " + expect + ", got: " + line, lineno);
        ++section;
        bool more = false;
        while ((more = next_content(line))) {
            if (line.rfind("\\", 0) == 0) break;
            auto fields = split_ws(line);
            size_t nf = fields.size();
            size_t n = static_cast<size_t>(section);
            if (nf != n + 1 && nf != n + 2)
                throw ParseError("bad " + std::to_string(section) + "-gram line: " + line, lineno);
            Entry e;
            try {
                e.logp = std::stod(fields[0]);
                if (nf == n + 2) {
                    e.bow = std::stod(fields[n + 1]);
                    e.has_bow = true;
                }
            } catch (const std::exception &) {
                throw ParseError("bad number in: " + line, lineno);
            }
            std::vector<int> ids;
            for (size_t i = 1; i <= n; ++i) ids.push_back(lm.intern(fields[i]));
            if (!lm.tables_[n - 1].emplace(pack_ids(ids.data(), section), e).second)
                throw ParseError("duplicate n-gram: " + line, lineno);
        }
        if (!more) throw ParseError("missing \\end\\ marker", lineno);
    }
    for (int n = 1; n <= lm.order_; ++n) {
        if (lm.tables_[static_cast<size_t>(n) - 1].size() != declared[static_cast<size_t>(n) - 1])
            throw ParseError("ngram " + std::to_string(n) + " count mismatch", lineno);
    }
    return lm;
}

void NGramLM::save(const std::string &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << to_arpa();
}

NGramLM NGramLM::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_arpa(buf.str());
}

void InterpolationWeights::validate() const {
    if (values.empty()) throw DataError("empty interpolation weights");
    double sum = 0.0;
    for (double w : values) {
        if (w < 0.0) throw DataError("negative interpolation weight");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw DataError("interpolation weights do not sum to 1");
}

InterpolationWeights em_interpolation_weights(const std::vector<const NGramLM *> &components,
                                              const std::vector<WordSeq> &hyps, int iters,
                                              std::vector<double> *ll_trace) {
    if (components.empty()) throw DataError("no component LMs");
    if (hyps.empty()) throw DataError("no hypotheses for weight fitting");
    size_t k = components.size();
    size_t s = hyps.size();

    std::vector<std::vector<double>> ll(k, std::vector<double>(s));
    for (size_t i = 0; i < k; ++i)
        for (size_t j = 0; j < s; ++j) ll[i][j] = components[i]->sequence_logprob(hyps[j]);

    std::vector<double> lambda(k, 1.0 / static_cast<double>(k));
    double prev_total = kLogZero;
    for (int it = 0; it < iters; ++it) {
        std::vector<double> resp_sum(k, 0.0);
        double total = 0.0;
        std::vector<double> terms(k);
        for (size_t j = 0; j < s; ++j) {
            for (size_t i = 0; i < k; ++i)
                terms[i] = (lambda[i] > 0.0 ? std::log10(lambda[i]) : kLogZero) + ll[i][j];
            double tot = log10_sum(terms);
            total += tot;
            for (size_t i = 0; i < k; ++i)
                if (terms[i] != kLogZero) resp_sum[i] += std::pow(10.0, terms[i] - tot);
        }
        if (ll_trace) ll_trace->push_back(total);
        if (it > 0 && total - prev_total < 1e-10) break;
        prev_total = total;
        for (size_t i = 0; i < k; ++i) resp_sum[i] /= static_cast<double>(s);
        lambda = resp_sum;
    }
    double norm = 0.0;
    for (double v : lambda) norm += v;
    for (double &v : lambda) v /= norm;
    InterpolationWeights out{lambda};
    out.validate();
    return out;
}

double interpolated_logprob(const std::vector<const NGramLM *> &components,
                            const InterpolationWeights &weights, const WordSeq &words) {
    weights.validate();
    if (weights.values.size() != components.size())
        throw DataError("weight count does not match component count");
    std::vector<double> terms;
    terms.reserve(components.size());
    for (size_t i = 0; i < components.size(); ++i) {
        double w = weights.values[i];
        if (w <= 0.0) continue;
        terms.push_back(std::log10(w) + components[i]->sequence_logprob(words));
    }
    return log10_sum(terms);
}

}  // namespace pcorr
