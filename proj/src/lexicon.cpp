#include "pcorr/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pcorr/phone_align.hpp"

namespace pcorr {

PhoneInventory::PhoneInventory() {
    labels_.emplace_back(kEpsLabel);
    index_[kEpsLabel] = kEps;
}

PhoneId PhoneInventory::add(const std::string &label) {
    if (label == kEpsLabel)
        throw DataError("\"<eps>\" is reserved and cannot be added as a phone");
    auto it = index_.find(label);
    if (it != index_.end()) return it->second;
    PhoneId id = static_cast<PhoneId>(labels_.size());
    labels_.push_back(label);
    index_[label] = id;
    return id;
}

PhoneId PhoneInventory::find(const std::string &label) const {
    auto it = index_.find(label);
    return it == index_.end() ? -1 : it->second;
}

PhoneSeq PhoneInventory::encode(const std::vector<std::string> &tokens) const {
    PhoneSeq seq;
    seq.reserve(tokens.size());
    for (const auto &t : tokens) {
        PhoneId id = find(t);
        if (id < 0) throw DataError("unknown phone: " + t);
        if (id == kEps) throw DataError("epsilon is not a valid phone in a sequence");
        seq.push_back(id);
    }
    return seq;
}

std::string PhoneInventory::decode(const PhoneSeq &seq) const {
    std::string out;
    for (size_t i = 0; i < seq.size(); ++i) {
        if (i) out += ' ';
        out += label(seq[i]);
    }
    return out;
}

void Lexicon::add_entry(const std::string &word, const PhoneSeq &pron) {
    if (pron.empty()) throw DataError("empty pronunciation for word: " + word);
    for (PhoneId p : pron)
        if (p <= 0 || p >= inventory_.size())
            throw DataError("pronunciation of " + word + " uses an invalid phone id");
    auto &variants = entries_[fold_word(word)];
    if (std::find(variants.begin(), variants.end(), pron) == variants.end())
        variants.push_back(pron);
}

bool Lexicon::contains(const std::string &word) const {
    return entries_.count(fold_word(word)) != 0;
}

const std::vector<PhoneSeq> &Lexicon::pronunciations(const std::string &word) const {
    auto it = entries_.find(fold_word(word));
    if (it == entries_.end()) throw OovError(word);
    return it->second;
}

std::vector<std::string> Lexicon::words() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto &kv : entries_) out.push_back(kv.first);
    return out;
}

bool Lexicon::operator==(const Lexicon &o) const {
    return inventory_ == o.inventory_ && entries_ == o.entries_;
}

Lexicon parse_lexicon(const std::string &text) {
    Lexicon lex;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#!inventory", 0) == 0) {
                for (const auto &tok : split_ws(line.substr(11))) {
                    if (tok == PhoneInventory::kEpsLabel)
                        throw ParseError("\"<eps>\" is not a declarable phone", lineno);
                    lex.inventory().add(tok);
                }
            }
            continue;
        }
        size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("expected `word<TAB>phones`", lineno);
        std::string word = line.substr(0, tab);
        if (word.empty()) throw ParseError("empty word field", lineno);
        std::vector<std::string> tokens = split_ws(line.substr(tab + 1));
        if (tokens.empty()) throw ParseError("empty pronunciation for \"" + word + "\"", lineno);
        PhoneSeq pron;
        pron.reserve(tokens.size());
        for (const auto &tok : tokens) {
            if (tok == PhoneInventory::kEpsLabel)
                throw ParseError("\"<eps>\" cannot appear in a pronunciation", lineno);
            pron.push_back(lex.inventory().add(tok));
        }
        lex.add_entry(word, pron);
    }
    // Reserved garbage phone backing the <unk> pronunciation of words the
    // lexicon does not cover; harmless when unused (its confusion row is the
    // identity-dominant default).
    lex.inventory().add(kUnkPhoneLabel);
    return lex;
}

Lexicon load_lexicon(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open lexicon file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_lexicon(ss.str());
}

std::string serialize_lexicon(const Lexicon &lex) {
    std::string out = "#!inventory";
    const auto &inv = lex.inventory();
    for (PhoneId p = 1; p < inv.size(); ++p) {
        out += ' ';
        out += inv.label(p);
    }
    out += '\n';
    for (const auto &word : lex.words()) {
        for (const auto &pron : lex.pronunciations(word)) {
            out += word;
            out += '\t';
            out += inv.decode(pron);
            out += '\n';
        }
    }
    return out;
}

void save_lexicon(const Lexicon &lex, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write lexicon file: " + path);
    out << serialize_lexicon(lex);
}

PhoneSeq pronounce(const Lexicon &lex, const WordSeq &words, VariantPolicy policy,
                   const ConfusionModel *cm, const PhoneSeq *obs) {
    if (policy == VariantPolicy::kMinChannelCost && (cm == nullptr || obs == nullptr))
        throw DataError("min-channel-cost pronunciation requires a confusion model and an observation");

    std::vector<const std::vector<PhoneSeq> *> variants;
    variants.reserve(words.size());
    size_t combos = 1;
    for (const auto &word : words) {
        variants.push_back(&lex.pronunciations(word));
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
    if (policy == VariantPolicy::kFirstListed || combos <= 1) return concat(choice);

    // Exhaustive search over the variant combination space; the first-found
    // maximum wins, so ties resolve toward earlier-listed variants.
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

}  // namespace pcorr
