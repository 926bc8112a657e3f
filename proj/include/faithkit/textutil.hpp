#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace faithkit {

inline bool ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = ascii_lower(c);
    return out;
}

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && ascii_space(s[b])) ++b;
    while (e > b && ascii_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

inline bool ascii_alnum(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Strips leading/trailing ASCII punctuation (quotes, commas, periods, ...).
// Non-ASCII bytes are treated as word characters and left alone.
inline std::string_view strip_edge_punct(std::string_view s) {
    std::size_t b = 0, e = s.size();
    auto punct = [](char c) {
        return c > 0 && c < 127 && !ascii_alnum(c) && !ascii_space(c);
    };
    while (b < e && punct(s[b])) ++b;
    while (e > b && punct(s[e - 1])) --e;
    return s.substr(b, e - b);
}

// A whitespace-delimited token with its byte span in the original text.
struct Token {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

inline std::vector<Token> tokenize_ws(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && ascii_space(text[i])) ++i;
        if (i >= text.size()) break;
        std::size_t b = i;
        while (i < text.size() && !ascii_space(text[i])) ++i;
        out.push_back({std::string(text.substr(b, i - b)), b, i});
    }
    return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    if (needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        std::size_t j = 0;
        while (j < needle.size() && ascii_lower(haystack[i + j]) == ascii_lower(needle[j])) ++j;
        if (j == needle.size()) return true;
    }
    return false;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace faithkit
