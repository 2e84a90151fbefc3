#include "refseg/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "refseg/errors.hpp"

namespace refseg {

const std::string kAttributePromptTemplate =
    "Given an image and the corresponding referring expression \"<input>\", the entity "
    "referred by the referring expression is unique in the image. Please generate a "
    "caption with local concept to describe the referent object according to the "
    "referring expression. The format is \"A photo of <object> (attribute)\".";

const std::string kSurroundingPromptTemplate =
    "Given an image and the corresponding referring expression \"<input>\", the entity "
    "referred by the referring expression is unique in the image. Please generate a "
    "caption to describe the referent object and its surrounding entities according to "
    "the referring expression. The format is \"A photo of <object> surrounded by "
    "(entities)\".";

const std::string& prompt_template(PromptKind kind) {
    return kind == PromptKind::attribute ? kAttributePromptTemplate : kSurroundingPromptTemplate;
}

std::string build_prompt(PromptKind kind, const std::string& expression) {
    if (expression.empty()) raise(Errc::empty_expression, "referring expression is empty");
    std::string out = prompt_template(kind);
    const std::string slot = "<input>";
    std::size_t pos = out.find(slot);
    out.replace(pos, slot.size(), expression);
    return out;
}

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

constexpr const char kPhotoPrefix[] = "a photo of";
constexpr std::size_t kPhotoPrefixLen = sizeof(kPhotoPrefix) - 1;

// Returns the [start, end) range of the first balanced "(...)" group at or
// after `from`, or npos/npos when absent or unbalanced.
std::pair<std::size_t, std::size_t> balanced_group(const std::string& s, std::size_t from) {
    std::size_t open = s.find('(', from);
    if (open == std::string::npos) return {std::string::npos, std::string::npos};
    int depth = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        else if (s[i] == ')' && --depth == 0) return {open, i + 1};
    }
    return {std::string::npos, std::string::npos};
}

std::vector<std::string> split_entity_list(const std::string& s) {
    std::vector<std::string> commas;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = s.find(',', start);
        commas.push_back(s.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    std::vector<std::string> out;
    for (const std::string& piece : commas) {
        std::size_t pos = 0;
        std::string lower = to_lower(piece);
        while (true) {
            std::size_t sep = lower.find(" and ", pos);
            std::string part = piece.substr(pos, sep - pos);
            if (std::string t = trim(part); !t.empty()) out.push_back(t);
            if (sep == std::string::npos) break;
            pos = sep + 5;
        }
    }
    return out;
}

} // namespace

AttributeParse parse_attribute_description(const std::string& raw) {
    const std::string trimmed = trim(raw);
    const std::string lower = to_lower(trimmed);
    if (!lower.starts_with(kPhotoPrefix)) return {raw, raw, true};

    auto [open, end] = balanced_group(trimmed, kPhotoPrefixLen);
    if (open == std::string::npos) return {raw, raw, true};

    std::string object = trim(trimmed.substr(kPhotoPrefixLen, open - kPhotoPrefixLen));
    if (object.empty()) return {raw, raw, true};
    std::string attribute = trim(trimmed.substr(open + 1, end - open - 2));
    return {object, attribute, false};
}

SurroundingParse parse_surrounding_description(const std::string& raw) {
    const std::string trimmed = trim(raw);
    const std::string lower = to_lower(trimmed);
    if (!lower.starts_with(kPhotoPrefix)) return {raw, {}, true};

    const std::string marker = " surrounded by ";
    std::size_t mark = lower.find(marker, kPhotoPrefixLen);
    if (mark == std::string::npos) return {raw, {}, true};

    std::string object = trim(trimmed.substr(kPhotoPrefixLen, mark - kPhotoPrefixLen));
    if (object.empty()) return {raw, {}, true};

    auto [open, end] = balanced_group(trimmed, mark + marker.size());
    if (open == std::string::npos) return {raw, {}, true};

    std::string inner = trimmed.substr(open + 1, end - open - 2);
    return {object, split_entity_list(inner), false};
}

DescriptionBundle make_bundle(const std::string& expression, const std::string& t_att,
                              const std::string& t_sur) {
    DescriptionBundle b;
    b.t_van = expression;
    b.t_att = t_att;
    b.t_sur = t_sur;
    AttributeParse att = parse_attribute_description(t_att);
    b.object_phrase = att.object_phrase;
    b.attribute_phrase = att.attribute_phrase;
    b.att_fallback_used = att.fallback;
    SurroundingParse sur = parse_surrounding_description(t_sur);
    b.entity_phrases = sur.entity_phrases;
    b.sur_fallback_used = sur.fallback;
    return b;
}

} // namespace refseg
