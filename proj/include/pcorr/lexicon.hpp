#ifndef PCORR_LEXICON_HPP
#define PCORR_LEXICON_HPP

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcorr/common.hpp"

namespace pcorr {

// Phone symbol table. Id 0 is always the epsilon (gap) symbol "<eps>", which
// is never a real phone and never appears in a PhoneSeq.
class PhoneInventory {
 public:
    static constexpr PhoneId kEps = 0;
    static constexpr const char *kEpsLabel = "<eps>";

    PhoneInventory();

    // Returns the id of label, adding it if necessary. Rejects kEpsLabel.
    PhoneId add(const std::string &label);
    // Returns the id of label or -1 if absent.
    PhoneId find(const std::string &label) const;
    const std::string &label(PhoneId id) const { return labels_.at(id); }
    // Number of symbols including epsilon.
    int size() const { return static_cast<int>(labels_.size()); }
    // Number of real phones (excluding epsilon).
    int num_phones() const { return size() - 1; }

    bool operator==(const PhoneInventory &o) const { return labels_ == o.labels_; }

    PhoneSeq encode(const std::vector<std::string> &tokens) const;
    std::string decode(const PhoneSeq &seq) const;

 private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, PhoneId> index_;
};

class ConfusionModel;

// Label of the reserved garbage phone that parse_lexicon always registers;
// out-of-lexicon words pronounce as a single one of these.
constexpr const char *kUnkPhoneLabel = "<unk>";

enum class VariantPolicy {
    kFirstListed,
    kMinChannelCost,
};

// Pronunciation lexicon: word -> one or more phone sequences.
class Lexicon {
 public:
    PhoneInventory &inventory() { return inventory_; }
    const PhoneInventory &inventory() const { return inventory_; }

    // Adds a pronunciation variant for word (stored lowercase). Duplicate
    // (word, pronunciation) pairs are ignored.
    void add_entry(const std::string &word, const PhoneSeq &pron);

    bool contains(const std::string &word) const;
    // All pronunciation variants of word, in insertion order.
    const std::vector<PhoneSeq> &pronunciations(const std::string &word) const;
    // Words in sorted order.
    std::vector<std::string> words() const;
    size_t num_words() const { return entries_.size(); }

    bool operator==(const Lexicon &o) const;

 private:
    PhoneInventory inventory_;
    std::map<std::string, std::vector<PhoneSeq>> entries_;
};

// Parses the tab-separated lexicon format: `word<TAB>phone phone ...`.
// Lines starting with '#' are comments, except a `#!inventory p1 p2 ...`
// directive which pre-declares the phone inventory.
Lexicon parse_lexicon(const std::string &text);
Lexicon load_lexicon(const std::string &path);

// Byte-stable serialization: inventory directive first, then words sorted
// lexicographically with variants in insertion order.
std::string serialize_lexicon(const Lexicon &lex);
void save_lexicon(const Lexicon &lex, const std::string &path);

// Concatenated pronunciation of a word sequence. kMinChannelCost searches the
// variant combinations for the one whose concatenation has the best channel
// score against obs and requires both cm and obs; ties keep earlier-listed
// variants. kFirstListed ignores cm and obs.
PhoneSeq pronounce(const Lexicon &lex, const WordSeq &words, VariantPolicy policy,
                   const ConfusionModel *cm = nullptr, const PhoneSeq *obs = nullptr);

}  // namespace pcorr

#endif  // PCORR_LEXICON_HPP
