#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faithkit/completion.hpp"
#include "faithkit/dataset.hpp"
#include "faithkit/distribution.hpp"

namespace faithkit {

enum class Regime { pt, it_exp, it_no_exp };
enum class AnswerOrder { predict_then_explain, explain_then_predict };

std::string_view regime_name(Regime regime);
std::optional<Regime> regime_from_name(std::string_view name);
std::string_view order_name(AnswerOrder order);
std::optional<AnswerOrder> order_from_name(std::string_view name);

// The explanation-length settings; an unset length omits the sentence.
std::span<const std::string_view> length_options();
bool is_length_option(std::string_view value);

struct PromptSpec {
    Regime regime = Regime::it_exp;
    AnswerOrder order = AnswerOrder::explain_then_predict;
    std::optional<std::string> length;
    std::size_t shots = 10;
    std::uint64_t shot_seed = 0;
};

// Length instructions need the instructed regimes; shots must be positive.
void validate_prompt_spec(const PromptSpec& spec);

// Uniform sample of shot examples without replacement, seeded by
// (shot_seed, query_id) so the pre and post phases of one example share
// shots. Regimes that show explanations only draw from explained examples.
std::vector<const Example*> sample_fewshot(std::span<const Example> train,
                                           const PromptSpec& spec, std::string_view query_id);

std::string build_prompt(const DatasetInfo& dataset, const PromptSpec& spec,
                         std::span<const Example* const> shots, const Example& query);

struct ParsedResponse {
    std::optional<std::string> label;
    std::string explanation;
    bool parse_ok = false;
    std::vector<std::string> flags;
};

// Recovers the answer label and explanation from a completion; tolerant of
// surrounding whitespace, a trailing period, and quoting around the label.
ParsedResponse parse_response(const DatasetInfo& dataset, const PromptSpec& spec,
                              std::string_view completion_text);

// Label distribution read from the candidate logprobs at the answer token.
// Throws DistributionUnavailable when the completion lacks usable candidates.
ClassDistribution extract_class_distribution(const DatasetInfo& dataset,
                                             const PromptSpec& spec,
                                             const Completion& completion);

}  // namespace faithkit
