#include "faithkit/lexicon.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "faithkit/errors.hpp"
#include "faithkit/textutil.hpp"

namespace faithkit {

namespace {

constexpr std::size_t kPosCount = 4;

std::string normalize_token(std::string_view token) {
    return ascii_lower(strip_edge_punct(token));
}

// Candidate base forms for an unknown inflected token, most specific first.
std::vector<std::string> inflection_candidates(const std::string& w) {
    std::vector<std::string> out;
    const std::size_t n = w.size();
    auto ends = [&](std::string_view suffix) {
        return n >= suffix.size() && w.compare(n - suffix.size(), suffix.size(), suffix) == 0;
    };
    auto add = [&](std::string candidate) {
        if (candidate.size() >= 2) out.push_back(std::move(candidate));
    };
    if (ends("ies") && n > 4) add(w.substr(0, n - 3) + "y");
    if (ends("ied") && n > 4) add(w.substr(0, n - 3) + "y");
    if (ends("s") && !ends("ss") && n > 3) add(w.substr(0, n - 1));
    if (ends("es") && n > 4) add(w.substr(0, n - 2));
    if (ends("ed") && n > 3) {
        add(w.substr(0, n - 2));
        add(w.substr(0, n - 1));
        if (n > 4 && w[n - 3] == w[n - 4]) add(w.substr(0, n - 3));
    }
    if (ends("ing") && n > 4) {
        add(w.substr(0, n - 3));
        add(w.substr(0, n - 3) + "e");
        if (n > 5 && w[n - 4] == w[n - 5]) add(w.substr(0, n - 4));
    }
    if (ends("er") && n > 3) {
        add(w.substr(0, n - 2));
        add(w.substr(0, n - 1));
        if (n > 4 && w[n - 3] == w[n - 4]) add(w.substr(0, n - 3));
    }
    if (ends("est") && n > 4) {
        add(w.substr(0, n - 3));
        add(w.substr(0, n - 3) + "e");
        if (n > 5 && w[n - 4] == w[n - 5]) add(w.substr(0, n - 4));
    }
    return out;
}

}  // namespace

std::string_view pos_name(Pos pos) {
    switch (pos) {
        case Pos::noun: return "noun";
        case Pos::verb: return "verb";
        case Pos::adjective: return "adjective";
        case Pos::adverb: return "adverb";
    }
    throw StructuralError("invalid pos value");
}

std::optional<Pos> pos_from_name(std::string_view name) {
    if (name == "noun") return Pos::noun;
    if (name == "verb") return Pos::verb;
    if (name == "adjective") return Pos::adjective;
    if (name == "adverb") return Pos::adverb;
    return std::nullopt;
}

std::vector<LexiconEntry> load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open lexicon file " + path.string());
    std::vector<LexiconEntry> entries;
    std::set<std::pair<std::string, Pos>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw StructuralError(path.string() + ":" + std::to_string(line_no) +
                                  ": expected `word<TAB>pos`");
        }
        const std::string word = ascii_lower(trim(line.substr(0, tab)));
        const auto pos = pos_from_name(trim(line.substr(tab + 1)));
        if (word.empty() || !pos) {
            throw StructuralError(path.string() + ":" + std::to_string(line_no) +
                                  ": bad lexicon entry");
        }
        if (!seen.emplace(word, *pos).second) {
            throw StructuralError(path.string() + ":" + std::to_string(line_no) +
                                  ": duplicate entry for \"" + word + "\"");
        }
        entries.push_back({word, *pos});
    }
    if (entries.empty()) throw StructuralError("lexicon file " + path.string() + " is empty");
    return entries;
}

LexiconTagger::LexiconTagger(const std::vector<LexiconEntry>& entries)
    : pos_totals_(kPosCount, 0) {
    for (const auto& entry : entries) {
        pos_sets_[entry.word] |= 1u << static_cast<unsigned>(entry.pos);
        ++pos_totals_[static_cast<std::size_t>(entry.pos)];
    }
}

std::optional<Pos> LexiconTagger::lookup(const std::string& word) const {
    const auto it = pos_sets_.find(word);
    if (it == pos_sets_.end()) return std::nullopt;
    std::optional<Pos> best;
    std::size_t best_count = 0;
    for (std::size_t p = 0; p < kPosCount; ++p) {
        if (!(it->second & (1u << p))) continue;
        if (!best || pos_totals_[p] > best_count) {
            best = static_cast<Pos>(p);
            best_count = pos_totals_[p];
        }
    }
    return best;
}

std::optional<Pos> LexiconTagger::tag(std::string_view token) const {
    const std::string word = normalize_token(token);
    if (word.empty()) return std::nullopt;
    if (auto hit = lookup(word)) return hit;
    for (const auto& candidate : inflection_candidates(word)) {
        if (auto hit = lookup(candidate)) return hit;
    }
    return std::nullopt;
}

PretaggedTagger::PretaggedTagger(const std::filesystem::path& corpus_path) {
    std::ifstream in(corpus_path);
    if (!in) throw StructuralError("cannot open tagged corpus " + corpus_path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw StructuralError(corpus_path.string() + ":" + std::to_string(line_no) +
                                  ": invalid JSON: " + e.what());
        }
        if (!j.contains("tokens") || !j.contains("tags") || !j["tokens"].is_array() ||
            !j["tags"].is_array() || j["tokens"].size() != j["tags"].size()) {
            throw StructuralError(corpus_path.string() + ":" + std::to_string(line_no) +
                                  ": expected parallel \"tokens\" and \"tags\" arrays");
        }
        for (std::size_t i = 0; i < j["tokens"].size(); ++i) {
            const std::string word = normalize_token(j["tokens"][i].get<std::string>());
            if (word.empty()) continue;
            const std::string tag = j["tags"][i].get<std::string>();
            std::size_t slot;
            if (auto pos = pos_from_name(tag)) {
                slot = static_cast<std::size_t>(*pos);
            } else if (tag == "other") {
                slot = kPosCount;
            } else {
                throw StructuralError(corpus_path.string() + ":" + std::to_string(line_no) +
                                      ": unknown tag \"" + tag + "\"");
            }
            auto [it, inserted] = counts_.try_emplace(word);
            if (inserted) it->second.fill(0);
            ++it->second[slot];
        }
    }
    if (counts_.empty()) {
        throw StructuralError("tagged corpus " + corpus_path.string() + " is empty");
    }
}

std::optional<Pos> PretaggedTagger::tag(std::string_view token) const {
    const auto it = counts_.find(normalize_token(token));
    if (it == counts_.end()) return std::nullopt;
    std::size_t best_slot = 0;
    for (std::size_t slot = 1; slot <= kPosCount; ++slot) {
        if (it->second[slot] > it->second[best_slot]) best_slot = slot;
    }
    if (best_slot == kPosCount || it->second[best_slot] == 0) return std::nullopt;
    return static_cast<Pos>(best_slot);
}

}  // namespace faithkit
