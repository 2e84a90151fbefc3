#include <doctest.h>

#include <random>

#include "refseg/errors.hpp"
#include "refseg/prompts.hpp"

using namespace refseg;

namespace {

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

} // namespace

TEST_CASE("build_prompt substitutes the expression into the frozen templates") {
    std::string att = build_prompt(PromptKind::attribute, "white shirt");
    CHECK(att.find("\"white shirt\"") != std::string::npos);
    CHECK(att.find("The format is \"A photo of <object> (attribute)\".") != std::string::npos);
    CHECK(att.find("the entity referred by the referring expression is unique in the image") !=
          std::string::npos);
    CHECK(att.find("<input>") == std::string::npos);

    std::string sur = build_prompt(PromptKind::surrounding, "woman on phone");
    CHECK(sur.find("surrounded by (entities)") != std::string::npos);
    CHECK(sur.find("\"woman on phone\"") != std::string::npos);

    CHECK_THROWS_AS(build_prompt(PromptKind::attribute, ""), Error);
    try {
        build_prompt(PromptKind::surrounding, "");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_expression);
    }
}

TEST_CASE("build_prompt contains the expression exactly once") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::string expr = "zq";
        for (int i = 0; i < 8; ++i) expr.push_back(char('a' + rng() % 26));
        for (PromptKind kind : {PromptKind::attribute, PromptKind::surrounding})
            CHECK(count_occurrences(build_prompt(kind, expr), expr) == 1);
    }
}

TEST_CASE("parse_attribute_description on well-formed captions") {
    auto p1 = parse_attribute_description("A photo of man (wearing a white shirt)");
    CHECK(p1.object_phrase == "man");
    CHECK(p1.attribute_phrase == "wearing a white shirt");
    CHECK_FALSE(p1.fallback);

    auto p2 = parse_attribute_description("A photo of aircraft (registered as n177xy)");
    CHECK(p2.object_phrase == "aircraft");
    CHECK(p2.attribute_phrase == "registered as n177xy");
    CHECK_FALSE(p2.fallback);

    // case-insensitive prefix, nested parens, trailing prose
    auto p3 = parse_attribute_description("a photo of dog (small (very) and loud) extra words");
    CHECK(p3.object_phrase == "dog");
    CHECK(p3.attribute_phrase == "small (very) and loud");
    CHECK_FALSE(p3.fallback);
}

TEST_CASE("parse_attribute_description falls back on free-form text") {
    auto p = parse_attribute_description("some freeform reply");
    CHECK(p.object_phrase == "some freeform reply");
    CHECK(p.attribute_phrase == "some freeform reply");
    CHECK(p.fallback);

    CHECK(parse_attribute_description("").fallback);
    CHECK(parse_attribute_description("A photo of man").fallback);           // no group
    CHECK(parse_attribute_description("A photo of man (unbalanced").fallback);
    CHECK(parse_attribute_description("A photo of (no object)").fallback);
}

TEST_CASE("parse_surrounding_description on well-formed captions") {
    auto p1 = parse_surrounding_description(
        "A photo of man surrounded by (a table, two chairs and a lamp)");
    CHECK(p1.object_phrase == "man");
    CHECK(p1.entity_phrases == std::vector<std::string>{"a table", "two chairs", "a lamp"});
    CHECK_FALSE(p1.fallback);

    auto p2 = parse_surrounding_description("A photo of dog surrounded by ()");
    CHECK(p2.object_phrase == "dog");
    CHECK(p2.entity_phrases.empty());
    CHECK_FALSE(p2.fallback);
}

TEST_CASE("parse_surrounding_description falls back on free-form text") {
    auto p = parse_surrounding_description("no format");
    CHECK(p.object_phrase == "no format");
    CHECK(p.entity_phrases.empty());
    CHECK(p.fallback);

    CHECK(parse_surrounding_description("A photo of man (attributes only)").fallback);
}

TEST_CASE("parse after format is the identity") {
    std::mt19937 rng(77);
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz ";
    auto random_phrase = [&](std::size_t len) {
        std::string s;
        while (s.size() < len) s.push_back(alphabet[rng() % alphabet.size()]);
        // no leading/trailing spaces so trimming is a no-op
        if (s.front() == ' ') s.front() = 'x';
        if (s.back() == ' ') s.back() = 'x';
        return s;
    };
    for (int trial = 0; trial < 100; ++trial) {
        std::string object = random_phrase(1 + rng() % 12);
        std::string attribute = random_phrase(1 + rng() % 20);
        auto parsed = parse_attribute_description("A photo of " + object + " (" + attribute + ")");
        CHECK_FALSE(parsed.fallback);
        CHECK(parsed.object_phrase == object);
        CHECK(parsed.attribute_phrase == attribute);
    }
}

TEST_CASE("parsers never throw on arbitrary bytes") {
    std::mt19937 rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        std::string garbage;
        std::size_t len = rng() % 64;
        for (std::size_t i = 0; i < len; ++i) garbage.push_back(char(rng() % 256));
        CHECK_NOTHROW(parse_attribute_description(garbage));
        CHECK_NOTHROW(parse_surrounding_description(garbage));
    }
}

TEST_CASE("make_bundle captures both parses") {
    DescriptionBundle b = make_bundle("the man", "A photo of man (tall)",
                                      "A photo of man surrounded by (a dog and a cart)");
    CHECK(b.t_van == "the man");
    CHECK(b.object_phrase == "man");
    CHECK(b.attribute_phrase == "tall");
    CHECK(b.entity_phrases == std::vector<std::string>{"a dog", "a cart"});
    CHECK_FALSE(b.att_fallback_used);
    CHECK_FALSE(b.sur_fallback_used);

    DescriptionBundle fb = make_bundle("x", "???", "???");
    CHECK(fb.att_fallback_used);
    CHECK(fb.sur_fallback_used);
    CHECK(fb.object_phrase == "???");
}
