#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace faithkit {

enum class Pos { noun, verb, adjective, adverb };

std::string_view pos_name(Pos pos);
std::optional<Pos> pos_from_name(std::string_view name);

struct LexiconEntry {
    std::string word;
    Pos pos;

    bool operator==(const LexiconEntry&) const = default;
};

// Reads UTF-8 lines of the form `word<TAB>pos`; words are lowercased, the
// pos must name one of the four classes, and exact duplicates are rejected.
std::vector<LexiconEntry> load_lexicon(const std::filesystem::path& path);

class PosTagger {
  public:
    virtual ~PosTagger() = default;
    // Tags one whitespace token; tokens the tagger cannot place return nullopt.
    virtual std::optional<Pos> tag(std::string_view token) const = 0;
};

// Dictionary tagger over the lexicon inventory. Ambiguous words resolve to
// the pos with the most lexicon entries overall (ties: noun, verb,
// adjective, adverb). Unknown tokens fall back to a small set of
// suffix-stripping rules and are retried against the dictionary.
class LexiconTagger : public PosTagger {
  public:
    explicit LexiconTagger(const std::vector<LexiconEntry>& entries);
    std::optional<Pos> tag(std::string_view token) const override;

  private:
    std::optional<Pos> lookup(const std::string& word) const;

    std::unordered_map<std::string, unsigned> pos_sets_;
    std::vector<std::size_t> pos_totals_;
};

// Tagger built from an externally tagged corpus: JSONL lines holding parallel
// "tokens" and "tags" arrays (tags from the four classes plus "other"). Each
// token resolves to its most frequent corpus tag; tokens seen mostly as
// "other", and tokens never seen, return nullopt.
class PretaggedTagger : public PosTagger {
  public:
    explicit PretaggedTagger(const std::filesystem::path& corpus_path);
    std::optional<Pos> tag(std::string_view token) const override;

  private:
    std::unordered_map<std::string, std::array<std::size_t, 5>> counts_;
};

}  // namespace faithkit
