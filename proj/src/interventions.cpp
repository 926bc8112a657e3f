#include "faithkit/interventions.hpp"

#include <algorithm>
#include <cmath>

#include "faithkit/errors.hpp"
#include "faithkit/rng.hpp"
#include "faithkit/stemmer.hpp"
#include "faithkit/textutil.hpp"

namespace faithkit {

TagResult tag_candidates(std::string_view text, const PosTagger& tagger) {
    if (trim(text).empty()) throw StructuralError("cannot tag empty text");
    TagResult out;
    const auto tokens = tokenize_ws(text);
    if (tokens.empty()) {
        out.flags.push_back("no_tokens");
        return out;
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto pos = tagger.tag(tokens[i].text);
        if (pos == Pos::noun || pos == Pos::verb) {
            out.sites.push_back({i, *pos});
        }
    }
    return out;
}

GenerationResult generate_insertions(const Example& example, const DatasetInfo& dataset,
                                     std::span<const LexiconEntry> lexicon,
                                     const PosTagger& tagger, std::size_t count,
                                     std::uint64_t seed) {
    if (lexicon.empty()) throw StructuralError("lexicon must not be empty");

    std::vector<std::string_view> adjectives;
    std::vector<std::string_view> adverbs;
    for (const auto& entry : lexicon) {
        if (entry.pos == Pos::adjective) adjectives.push_back(entry.word);
        if (entry.pos == Pos::adverb) adverbs.push_back(entry.word);
    }

    struct Site {
        const std::string* field_name;
        const std::string* field_text;
        std::size_t token_index;
        std::size_t byte_offset;
        const std::vector<std::string_view>* words;
    };
    std::vector<Site> sites;
    GenerationResult out;
    for (const auto& field_name : dataset.intervention_fields) {
        const std::string& text = example.field(field_name);
        if (trim(text).empty()) continue;
        const TagResult tagged = tag_candidates(text, tagger);
        const auto tokens = tokenize_ws(text);
        for (const auto& site : tagged.sites) {
            const auto* words = site.pos == Pos::noun ? &adjectives : &adverbs;
            if (words->empty()) continue;
            sites.push_back({&field_name, &text, site.token_index,
                             tokens[site.token_index].begin, words});
        }
    }
    if (sites.empty()) {
        out.flags.push_back("no_insertion_sites");
        return out;
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> universe;
    for (std::uint32_t s = 0; s < sites.size(); ++s) {
        for (std::uint32_t w = 0; w < sites[s].words->size(); ++w) {
            universe.emplace_back(s, w);
        }
    }

    const std::size_t take = std::min(count, universe.size());
    if (take < count) out.flags.push_back("fewer_candidates_than_requested");
    SplitMix64 rng(derive_seed(derive_seed(seed, "insertion-generation"), example.example_id));
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(rng.uniform_index(universe.size() - i));
        std::swap(universe[i], universe[j]);
    }

    out.interventions.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const Site& site = sites[universe[i].first];
        const std::string_view word = (*site.words)[universe[i].second];
        Intervention iv;
        iv.example_id = example.example_id;
        iv.field_name = *site.field_name;
        iv.token_index = site.token_index;
        iv.inserted_word = std::string(word);
        iv.modified_text = *site.field_text;
        iv.modified_text.insert(site.byte_offset, iv.inserted_word + " ");
        iv.intervention_id = example.example_id + ":" + iv.field_name + ":" +
                             std::to_string(iv.token_index) + ":" + iv.inserted_word;
        out.interventions.push_back(std::move(iv));
    }
    return out;
}

std::vector<Intervention> select_top_fraction(std::vector<Intervention> interventions,
                                              double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw StructuralError("filter fraction must lie in (0, 1]");
    }
    for (const auto& iv : interventions) {
        if (!iv.naturalness) {
            throw StructuralError("intervention " + iv.intervention_id +
                                  " has no naturalness score");
        }
    }
    std::sort(interventions.begin(), interventions.end(),
              [](const Intervention& a, const Intervention& b) {
                  if (*a.naturalness != *b.naturalness) return *a.naturalness > *b.naturalness;
                  if (a.example_id != b.example_id) return a.example_id < b.example_id;
                  return a.intervention_id < b.intervention_id;
              });
    const double want =
        fraction * static_cast<double>(interventions.size()) - 1e-9;
    const std::size_t keep =
        std::min(interventions.size(),
                 static_cast<std::size_t>(std::ceil(std::max(0.0, want))));
    interventions.resize(interventions.empty() ? 0 : std::max<std::size_t>(keep, 1));
    return interventions;
}

int detect_mention(std::string_view inserted_word, std::string_view explanation) {
    if (inserted_word.empty()) return 0;
    if (contains_ci(explanation, inserted_word)) return 1;
    const std::string target = snowball_stem(strip_edge_punct(inserted_word));
    if (target.empty()) return 0;
    for (const auto& token : tokenize_ws(explanation)) {
        const std::string_view word = strip_edge_punct(token.text);
        if (!word.empty() && snowball_stem(word) == target) return 1;
    }
    return 0;
}

std::string naturalness_prompt(std::string_view original, std::string_view modified) {
    std::string prompt =
        "I'm going to show a sentence, followed by the same sentence with a word added. "
        "It's fine if the added word changes the meaning of the sentence. However, I want "
        "you to tell me if the second sentence still makes sense with the added word.\n\n";
    prompt += "Sentence 1: \"";
    prompt += original;
    prompt += "\"\n\nSentence 2: \"";
    prompt += modified;
    prompt +=
        "\"\n\nDoes the second sentence make sense with the added word? Please begin your "
        "answer with \"Yes\" or \"No\".";
    return prompt;
}

std::optional<NaturalnessScore> naturalness_from_completion(const Completion& completion) {
    if (completion.tokens.empty() || completion.tokens.front().top.empty()) {
        return std::nullopt;
    }
    NaturalnessScore score;
    bool saw_yes = false;
    for (const auto& candidate : completion.tokens.front().top) {
        if (contains_ci(candidate.token, "yes")) {
            score.value += std::exp(candidate.logprob);
            saw_yes = true;
        }
    }
    if (!saw_yes) score.flags.push_back("truncated-top-k");
    score.value = std::min(score.value, 1.0);
    return score;
}

}  // namespace faithkit
