// Prompt templates for the two description kinds and parsers for the
// structured captions they request. Templates are frozen constants: the
// prompt text is part of the method, so any drift changes results.

#pragma once

#include <string>
#include <vector>

namespace refseg {

enum class PromptKind { attribute, surrounding };

// `<input>` is the substitution slot for the referring expression.
extern const std::string kAttributePromptTemplate;
extern const std::string kSurroundingPromptTemplate;

const std::string& prompt_template(PromptKind kind);

// Replaces `<input>` with the expression verbatim. EmptyExpression on "".
std::string build_prompt(PromptKind kind, const std::string& expression);

struct AttributeParse {
    std::string object_phrase;
    std::string attribute_phrase;
    bool fallback = false;
};

// Expects `A photo of <object> (attribute)`: case-insensitive prefix, first
// balanced parenthesis group. On mismatch returns (raw, raw, fallback=true).
// Never throws.
AttributeParse parse_attribute_description(const std::string& raw);

struct SurroundingParse {
    std::string object_phrase;
    std::vector<std::string> entity_phrases;
    bool fallback = false;
};

// Expects `A photo of <object> surrounded by (entities)`; entities split on
// "," and " and ". On mismatch returns (raw, [], fallback=true). Never throws.
SurroundingParse parse_surrounding_description(const std::string& raw);

struct DescriptionBundle {
    std::string t_van; // the referring expression
    std::string t_att;
    std::string t_sur;
    std::string object_phrase;
    std::string attribute_phrase;
    std::vector<std::string> entity_phrases; // pre-filter
    bool att_fallback_used = false;
    bool sur_fallback_used = false;
};

// Parses both generated descriptions into a bundle.
DescriptionBundle make_bundle(const std::string& expression, const std::string& t_att,
                              const std::string& t_sur);

} // namespace refseg
