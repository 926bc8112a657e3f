#include "faithkit/stemmer.hpp"

#include <array>
#include <cstddef>
#include <utility>

#include "faithkit/textutil.hpp"

namespace faithkit {
namespace {

// 'y' counts as a vowel; 'Y' is the prelude's consonant marker.
bool vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool ends_with(const std::string& w, std::string_view suf) {
    return w.size() >= suf.size() && std::string_view(w).substr(w.size() - suf.size()) == suf;
}

bool valid_li_ending(char c) {
    return c == 'c' || c == 'd' || c == 'e' || c == 'g' || c == 'h' || c == 'k' ||
           c == 'm' || c == 'n' || c == 'r' || c == 't';
}

bool ends_double(const std::string& w) {
    if (w.size() < 2) return false;
    char a = w[w.size() - 2], b = w[w.size() - 1];
    if (a != b) return false;
    return a == 'b' || a == 'd' || a == 'f' || a == 'g' || a == 'm' || a == 'n' ||
           a == 'p' || a == 'r' || a == 't';
}

// Short syllable ending just before position `end`: either non-vowel, vowel,
// non-vowel (not w/x/Y), or vowel + non-vowel at the very start of the word.
bool short_v(const std::string& w, std::size_t end) {
    if (end >= 3 && !vowel(w[end - 3]) && vowel(w[end - 2]) && !vowel(w[end - 1]) &&
        w[end - 1] != 'w' && w[end - 1] != 'x' && w[end - 1] != 'Y') {
        return true;
    }
    return end == 2 && vowel(w[0]) && !vowel(w[1]);
}

struct Regions {
    std::size_t p1;
    std::size_t p2;
};

Regions mark_regions(const std::string& w) {
    const std::size_t n = w.size();
    Regions r{n, n};
    std::size_t i = 0;
    if (w.rfind("gener", 0) == 0 || w.rfind("arsen", 0) == 0) {
        i = 5;
    } else if (w.rfind("commun", 0) == 0) {
        i = 6;
    } else {
        while (i < n && !vowel(w[i])) ++i;
        while (i < n && vowel(w[i])) ++i;
        if (i < n) ++i; else { return r; }
        r.p1 = i;
        // fall through to p2 scan below with i already past p1
        std::size_t j = i;
        while (j < n && !vowel(w[j])) ++j;
        while (j < n && vowel(w[j])) ++j;
        if (j < n) r.p2 = j + 1;
        return r;
    }
    r.p1 = i;
    std::size_t j = i;
    while (j < n && !vowel(w[j])) ++j;
    while (j < n && vowel(w[j])) ++j;
    if (j < n) r.p2 = j + 1;
    return r;
}

const std::pair<std::string_view, std::string_view> kException1[] = {
    {"skis", "ski"},   {"skies", "sky"},   {"dying", "die"},  {"lying", "lie"},
    {"tying", "tie"},  {"idly", "idl"},    {"gently", "gentl"}, {"ugly", "ugli"},
    {"early", "earli"}, {"only", "onli"},  {"singly", "singl"}, {"sky", "sky"},
    {"news", "news"},  {"howe", "howe"},   {"atlas", "atlas"}, {"cosmos", "cosmos"},
    {"bias", "bias"},  {"andes", "andes"},
};

const std::string_view kException2[] = {
    "inning", "outing", "canning", "herring", "earring", "proceed", "exceed", "succeed",
};

bool has_vowel_before(const std::string& w, std::size_t end) {
    for (std::size_t i = 0; i < end; ++i) {
        if (vowel(w[i])) return true;
    }
    return false;
}

void step0(std::string& w) {
    for (std::string_view suf : {std::string_view("'s'"), std::string_view("'s"), std::string_view("'")}) {
        if (ends_with(w, suf)) {
            w.resize(w.size() - suf.size());
            return;
        }
    }
}

void step1a(std::string& w) {
    if (ends_with(w, "sses")) {
        w.resize(w.size() - 2);
        return;
    }
    if (ends_with(w, "ied") || ends_with(w, "ies")) {
        if (w.size() > 4) {
            w.resize(w.size() - 2);  // -> "...i"
        } else {
            w.resize(w.size() - 1);  // -> "...ie"
        }
        return;
    }
    if (ends_with(w, "us") || ends_with(w, "ss")) return;
    if (ends_with(w, "s")) {
        // Delete only if a vowel occurs before the char immediately preceding s.
        if (w.size() >= 3 && has_vowel_before(w, w.size() - 2)) w.resize(w.size() - 1);
    }
}

void step1b(std::string& w, const Regions& r) {
    static constexpr std::array<std::string_view, 2> kEe = {"eedly", "eed"};
    for (std::string_view suf : kEe) {
        if (ends_with(w, suf)) {
            if (w.size() - suf.size() >= r.p1) w.resize(w.size() - suf.size() + 2);
            return;
        }
    }
    static constexpr std::array<std::string_view, 4> kDel = {"ingly", "edly", "ing", "ed"};
    for (std::string_view suf : kDel) {
        if (!ends_with(w, suf)) continue;
        if (!has_vowel_before(w, w.size() - suf.size())) return;
        w.resize(w.size() - suf.size());
        if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
            w += 'e';
        } else if (ends_double(w)) {
            w.pop_back();
        } else if (r.p1 == w.size() && short_v(w, w.size())) {
            w += 'e';
        }
        return;
    }
}

void step1c(std::string& w) {
    const std::size_t n = w.size();
    if (n >= 3 && (w[n - 1] == 'y' || w[n - 1] == 'Y') && !vowel(w[n - 2])) {
        w[n - 1] = 'i';
    }
}

struct Rule {
    std::string_view suffix;
    std::string_view replacement;
    // 0 none, 1 requires preceding 'l' (ogi), 2 requires valid li-ending (li)
    int condition;
};

// Ordered longest-first; the first textual match is the longest match, and if
// its region/side condition fails the whole step does nothing.
const Rule kStep2[] = {
    {"ization", "ize", 0}, {"ational", "ate", 0}, {"fulness", "ful", 0},
    {"ousness", "ous", 0}, {"iveness", "ive", 0}, {"tional", "tion", 0},
    {"biliti", "ble", 0},  {"lessli", "less", 0}, {"entli", "ent", 0},
    {"ation", "ate", 0},   {"alism", "al", 0},    {"aliti", "al", 0},
    {"ousli", "ous", 0},   {"iviti", "ive", 0},   {"fulli", "ful", 0},
    {"enci", "ence", 0},   {"anci", "ance", 0},   {"abli", "able", 0},
    {"izer", "ize", 0},    {"ator", "ate", 0},    {"alli", "al", 0},
    {"bli", "ble", 0},     {"ogi", "og", 1},      {"li", "", 2},
};

const Rule kStep3[] = {
    {"ational", "ate", 0}, {"tional", "tion", 0}, {"alize", "al", 0},
    {"icate", "ic", 0},    {"iciti", "ic", 0},    {"ative", "", 3},
    {"ical", "ic", 0},     {"ness", "", 0},       {"ful", "", 0},
};

void step2(std::string& w, const Regions& r) {
    for (const Rule& rule : kStep2) {
        if (!ends_with(w, rule.suffix)) continue;
        const std::size_t start = w.size() - rule.suffix.size();
        if (start < r.p1) return;
        if (rule.condition == 1 && (start == 0 || w[start - 1] != 'l')) return;
        if (rule.condition == 2 && (start == 0 || !valid_li_ending(w[start - 1]))) return;
        w.resize(start);
        w += rule.replacement;
        return;
    }
}

void step3(std::string& w, const Regions& r) {
    for (const Rule& rule : kStep3) {
        if (!ends_with(w, rule.suffix)) continue;
        const std::size_t start = w.size() - rule.suffix.size();
        if (start < r.p1) return;
        if (rule.condition == 3 && start < r.p2) return;  // 'ative' needs R2
        w.resize(start);
        w += rule.replacement;
        return;
    }
}

void step4(std::string& w, const Regions& r) {
    static constexpr std::array<std::string_view, 18> kSuf = {
        "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ion",
        "ism",   "ate",  "iti",  "ous",  "ive",  "ize",  "al",  "er",  "ic",
    };
    for (std::string_view suf : kSuf) {
        if (!ends_with(w, suf)) continue;
        const std::size_t start = w.size() - suf.size();
        if (start < r.p2) return;
        if (suf == "ion" && (start == 0 || (w[start - 1] != 's' && w[start - 1] != 't'))) return;
        w.resize(start);
        return;
    }
}

void step5(std::string& w, const Regions& r) {
    const std::size_t n = w.size();
    if (n == 0) return;
    if (w[n - 1] == 'e') {
        const std::size_t idx = n - 1;
        if (idx >= r.p2 || (idx >= r.p1 && !short_v(w, idx))) w.pop_back();
        return;
    }
    if (w[n - 1] == 'l') {
        const std::size_t idx = n - 1;
        if (idx >= r.p2 && n >= 2 && w[n - 2] == 'l') w.pop_back();
    }
}

}  // namespace

std::string snowball_stem(std::string_view word) {
    std::string w = ascii_lower(word);
    if (w.size() <= 2) return w;

    for (const auto& [from, to] : kException1) {
        if (w == from) return std::string(to);
    }

    if (w[0] == '\'') w.erase(0, 1);
    if (w.size() <= 2) return w;
    if (w[0] == 'y') w[0] = 'Y';
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (w[i] == 'y' && vowel(w[i - 1])) w[i] = 'Y';
    }

    const Regions r = mark_regions(w);

    step0(w);
    step1a(w);

    bool stop = false;
    for (std::string_view ex : kException2) {
        if (w == ex) { stop = true; break; }
    }
    if (!stop) {
        step1b(w, r);
        step1c(w);
        step2(w, r);
        step3(w, r);
        step4(w, r);
        step5(w, r);
    }

    for (char& c : w) {
        if (c == 'Y') c = 'y';
    }
    return w;
}

}  // namespace faithkit
