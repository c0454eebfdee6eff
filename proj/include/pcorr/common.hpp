#ifndef PCORR_COMMON_HPP
#define PCORR_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcorr {

using PhoneId = int32_t;

// Phone id sequence. Never contains the epsilon id (see PhoneInventory::kEps);
// parsers and generators enforce this at construction.
using PhoneSeq = std::vector<PhoneId>;

using WordSeq = std::vector<std::string>;

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

struct ParseError : std::runtime_error {
    ParseError(const std::string &what, int line = -1)
        : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_number(line) {}
    int line_number;
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string &what) : std::runtime_error(what) {}
};

struct OovError : DataError {
    explicit OovError(const std::string &word)
        : DataError("out-of-vocabulary word: " + word), word(word) {}
    std::string word;
};

// Formats a double with the given number of significant digits. Reparsing the
// result and formatting again yields the same bytes, which is what the
// serialized model files rely on for stable round-trips.
inline std::string fmt_sig(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
    return buf;
}

// log10(sum_i 10^x_i), stable for widely spread exponents.
inline double log10_sum(const std::vector<double> &xs) {
    double m = kLogZero;
    for (double x : xs)
        if (x > m) m = x;
    if (m == kLogZero) return kLogZero;
    double acc = 0.0;
    for (double x : xs) acc += std::pow(10.0, x - m);
    return m + std::log10(acc);
}

inline std::vector<std::string> split_ws(const std::string &s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

// Canonical word form: ASCII letters lowercased, everything else kept. Words
// are folded once at every external boundary (lexicon, LM training, scoring
// input) so comparisons inside the library are plain string equality.
inline std::string fold_word(const std::string &word) {
    std::string out = word;
    for (char &c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline std::string join(const WordSeq &words, const char *sep = " ") {
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out += sep;
        out += words[i];
    }
    return out;
}

}  // namespace pcorr

#endif  // PCORR_COMMON_HPP
