#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faithkit/completion.hpp"
#include "faithkit/dataset.hpp"
#include "faithkit/lexicon.hpp"

namespace faithkit {

struct Intervention {
    std::string intervention_id;
    std::string example_id;
    std::string field_name;
    std::size_t token_index = 0;
    std::string inserted_word;
    std::string modified_text;
    std::optional<double> naturalness;

    bool operator==(const Intervention&) const = default;
};

struct TagSite {
    std::size_t token_index = 0;
    Pos pos = Pos::noun;

    bool operator==(const TagSite&) const = default;
};

struct TagResult {
    std::vector<TagSite> sites;
    std::vector<std::string> flags;
};

// Insertion sites in `text`: token positions where the tagger sees a noun or
// a verb beginning.
TagResult tag_candidates(std::string_view text, const PosTagger& tagger);

struct GenerationResult {
    std::vector<Intervention> interventions;
    std::vector<std::string> flags;
};

// Uniform sample, without replacement, of (site, compatible word) pairs over
// the dataset's intervention fields: adjectives land before nouns, adverbs
// before verbs. Deterministic per (seed, example_id).
GenerationResult generate_insertions(const Example& example, const DatasetInfo& dataset,
                                     std::span<const LexiconEntry> lexicon,
                                     const PosTagger& tagger, std::size_t count,
                                     std::uint64_t seed);

// Keeps the ceil(fraction * n) highest-naturalness interventions; ties break
// by (example_id, intervention_id) so the cut is deterministic.
std::vector<Intervention> select_top_fraction(std::vector<Intervention> interventions,
                                              double fraction);

// 1 iff the inserted word appears case-insensitively as a substring of the
// explanation, or shares a Snowball stem with one of its words.
int detect_mention(std::string_view inserted_word, std::string_view explanation);

std::string naturalness_prompt(std::string_view original, std::string_view modified);

struct NaturalnessScore {
    double value = 0.0;
    std::vector<std::string> flags;
};

// Derives the naturalness score from the judge's first-position candidate
// masses; nullopt when the completion carries no token-level candidates, in
// which case the caller falls back to sampled votes.
std::optional<NaturalnessScore> naturalness_from_completion(const Completion& completion);

}  // namespace faithkit
