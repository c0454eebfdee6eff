#include "doctest.h"

#include "pcorr/lexicon.hpp"
#include "pcorr/phone_align.hpp"

using namespace pcorr;

TEST_CASE("phone inventory reserves epsilon and rejects it as a phone") {
    PhoneInventory inv;
    CHECK(inv.size() == 1);
    CHECK(inv.num_phones() == 0);
    CHECK(inv.label(PhoneInventory::kEps) == PhoneInventory::kEpsLabel);
    CHECK_THROWS_AS(inv.add(PhoneInventory::kEpsLabel), DataError);
    PhoneId a = inv.add("aa");
    CHECK(a == 1);
    CHECK(inv.add("aa") == a);  // idempotent
    CHECK(inv.find("aa") == a);
    CHECK(inv.find("zz") == -1);
    CHECK(inv.encode({"aa"}) == PhoneSeq{a});
    CHECK(inv.decode({a}) == "aa");
    CHECK_THROWS_AS(inv.encode({"zz"}), DataError);
}

TEST_CASE("lexicon parses tab-separated entries and folds case") {
    Lexicon lex = parse_lexicon("Weather\tw eh dh er\nweather\tw eh d er\nplay\tp l ey\n");
    CHECK(lex.num_words() == 2);
    CHECK(lex.contains("weather"));
    CHECK(lex.contains("WEATHER"));  // lookup folds too
    CHECK(lex.pronunciations("weather").size() == 2);
    CHECK(lex.words() == std::vector<std::string>{"play", "weather"});
}

TEST_CASE("inventory directive pins phone ids") {
    std::string text = "#!inventory zz yy xx\nword\txx yy\n";
    Lexicon lex = parse_lexicon(text);
    CHECK(lex.inventory().find("zz") == 1);
    CHECK(lex.inventory().find("yy") == 2);
    CHECK(lex.inventory().find("xx") == 3);
    // The reserved garbage phone is always present.
    CHECK(lex.inventory().find(kUnkPhoneLabel) > 0);
}

TEST_CASE("duplicate entries are dropped, comments skipped") {
    Lexicon lex = parse_lexicon("# comment\nplay\tp l ey\nplay\tp l ey\n\n");
    CHECK(lex.pronunciations("play").size() == 1);
}

TEST_CASE("lexicon serialization round-trips byte for byte") {
    Lexicon lex = parse_lexicon("beta\tb e\nalpha\ta\nalpha\ta a\n");
    std::string text = serialize_lexicon(lex);
    Lexicon back = parse_lexicon(text);
    CHECK(back == lex);
    CHECK(serialize_lexicon(back) == text);
    // Serialized words come out sorted regardless of input order.
    CHECK(text.find("alpha") < text.find("beta"));
}

TEST_CASE("lexicon parse errors carry line numbers") {
    try {
        parse_lexicon("good\tg uh d\nbad-line-without-tab\n");
        FAIL("expected ParseError");
    } catch (const ParseError &e) {
        CHECK(e.line_number == 2);
    }
    CHECK_THROWS_AS(parse_lexicon("word\t\n"), ParseError);
    CHECK_THROWS_AS(parse_lexicon("\tp l ey\n"), ParseError);
}

TEST_CASE("pronounce concatenates first-listed variants") {
    Lexicon lex = parse_lexicon("go\tg ow\nnorth\tn ao r th\nnorth\tn o r t\n");
    const PhoneInventory &inv = lex.inventory();
    PhoneSeq got = pronounce(lex, {"go", "north"}, VariantPolicy::kFirstListed);
    CHECK(got == inv.encode({"g", "ow", "n", "ao", "r", "th"}));
    CHECK_THROWS_AS(pronounce(lex, {"missing"}, VariantPolicy::kFirstListed), OovError);
}

TEST_CASE("pronounce can pick the channel-best variant combination") {
    Lexicon lex = parse_lexicon("#!inventory a b c\nw\ta\nw\tb\nv\tc\n");
    const PhoneInventory &inv = lex.inventory();
    // Channel that strongly prefers identity.
    std::vector<std::vector<double>> em(4, std::vector<double>(4, 0.0));
    for (int o = 1; o <= 3; ++o) em[0][o] = 1.0 / 3;
    for (int r = 1; r <= 3; ++r)
        for (int o = 0; o <= 3; ++o) em[r][o] = o == r ? 0.91 : 0.03;
    ConfusionModel cm({"a", "b", "c"}, em, 0.05);

    PhoneSeq obs_b = inv.encode({"b", "c"});
    PhoneSeq got = pronounce(lex, {"w", "v"}, VariantPolicy::kMinChannelCost, &cm, &obs_b);
    CHECK(got == inv.encode({"b", "c"}));  // second variant of w explains obs best

    PhoneSeq obs_a = inv.encode({"a", "c"});
    got = pronounce(lex, {"w", "v"}, VariantPolicy::kMinChannelCost, &cm, &obs_a);
    CHECK(got == inv.encode({"a", "c"}));
}
