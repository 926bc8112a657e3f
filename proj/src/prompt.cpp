#include "faithkit/prompt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "faithkit/errors.hpp"
#include "faithkit/rng.hpp"
#include "faithkit/textutil.hpp"

namespace faithkit {

namespace {

constexpr std::array<std::string_view, 4> kLengthOptions = {
    "very concise", "concise", "comprehensive", "very comprehensive"};

std::string_view first_marker(const DatasetInfo& dataset, const PromptSpec& spec) {
    return spec.order == AnswerOrder::predict_then_explain ? std::string_view(dataset.answer_marker)
                                                           : std::string_view("EXPLANATION");
}

std::string render_fields(const DatasetInfo& dataset, const Example& example) {
    std::string out;
    for (std::size_t i = 0; i < dataset.field_names.size(); ++i) {
        if (i) out += "\n";
        out += dataset.field_display_names[i];
        out += ": ";
        out += example.field(dataset.field_names[i]);
    }
    return out;
}

std::string render_shot(const DatasetInfo& dataset, const PromptSpec& spec,
                        const Example& shot) {
    std::string out = render_fields(dataset, shot);
    const std::string answer_line = dataset.answer_marker + ": " + shot.gold_label;
    if (spec.regime == Regime::it_no_exp) {
        return out + "\n" + answer_line;
    }
    if (!shot.human_explanation) {
        throw StructuralError("shot example " + shot.example_id + " has no explanation");
    }
    const std::string explanation_line = "EXPLANATION: " + *shot.human_explanation;
    if (spec.order == AnswerOrder::predict_then_explain) {
        return out + "\n" + answer_line + "\n" + explanation_line;
    }
    return out + "\n" + explanation_line + "\n" + answer_line;
}

std::string render_instruction(const DatasetInfo& dataset, const PromptSpec& spec) {
    const std::string marker = dataset.answer_marker + ":";
    std::string out = "Now I'm going to show you the beginning of a new example. Please "
                      "complete it in the same format as the previous examples, beginning "
                      "your answer with \"";
    out += first_marker(dataset, spec);
    out += ":\". I'm going to parse your response programatically, so remember to match "
           "the format of the examples exactly. Respond only in plain text, DO NOT use any "
           "formatting like bold or italics in your response. ";
    if (spec.order == AnswerOrder::explain_then_predict) {
        out += "Provide both \"EXPLANATION:\" and \"" + marker + "\".";
    } else {
        out += "Provide \"" + marker +
               "\". Then, on the next line, explain why you chose that label, beginning "
               "with \"EXPLANATION:\". ";
    }
    if (spec.length) {
        out += " Your explanation should be " + *spec.length + ".";
    }
    out += " Remember that \"" + marker + "\" should be one of " + dataset.label_tuple + ".";
    return out;
}

// Byte offset of the first line starting with `marker` + ':', or npos.
std::size_t find_marker_line(std::string_view text, std::string_view marker) {
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::string_view rest = text.substr(line_start);
        if (rest.size() > marker.size() && rest.substr(0, marker.size()) == marker &&
            rest[marker.size()] == ':') {
            return line_start;
        }
        const std::size_t nl = text.find('\n', line_start);
        if (nl == std::string_view::npos) break;
        line_start = nl + 1;
    }
    return std::string_view::npos;
}

std::optional<std::string> match_label(const DatasetInfo& dataset, std::string_view raw) {
    std::string_view value = trim(raw);
    if (!value.empty() && value.back() == '.') value.remove_suffix(1);
    value = trim(value);
    if (value.size() >= 2 && value.front() == value.back() &&
        (value.front() == '"' || value.front() == '\'')) {
        value = trim(value.substr(1, value.size() - 2));
    }
    if (value.empty()) return std::nullopt;
    const std::string lowered = ascii_lower(value);
    for (const auto& label : dataset.labels) {
        if (ascii_lower(label) == lowered) return label;
    }
    return std::nullopt;
}

}  // namespace

std::string_view regime_name(Regime regime) {
    switch (regime) {
        case Regime::pt: return "pt";
        case Regime::it_exp: return "it-exp";
        case Regime::it_no_exp: return "it-no-exp";
    }
    throw StructuralError("invalid regime value");
}

std::optional<Regime> regime_from_name(std::string_view name) {
    if (name == "pt") return Regime::pt;
    if (name == "it-exp") return Regime::it_exp;
    if (name == "it-no-exp") return Regime::it_no_exp;
    return std::nullopt;
}

std::string_view order_name(AnswerOrder order) {
    return order == AnswerOrder::predict_then_explain ? "pe" : "ep";
}

std::optional<AnswerOrder> order_from_name(std::string_view name) {
    if (name == "pe") return AnswerOrder::predict_then_explain;
    if (name == "ep") return AnswerOrder::explain_then_predict;
    return std::nullopt;
}

std::span<const std::string_view> length_options() { return kLengthOptions; }

bool is_length_option(std::string_view value) {
    return std::find(kLengthOptions.begin(), kLengthOptions.end(), value) !=
           kLengthOptions.end();
}

void validate_prompt_spec(const PromptSpec& spec) {
    if (spec.shots == 0) throw StructuralError("prompts need at least one shot");
    if (spec.length) {
        if (!is_length_option(*spec.length)) {
            throw StructuralError("unknown length instruction \"" + *spec.length + "\"");
        }
        if (spec.regime == Regime::pt) {
            throw StructuralError("length instructions require an instructed regime");
        }
    }
}

std::vector<const Example*> sample_fewshot(std::span<const Example> train,
                                           const PromptSpec& spec, std::string_view query_id) {
    validate_prompt_spec(spec);
    std::vector<const Example*> pool;
    pool.reserve(train.size());
    for (const auto& ex : train) {
        if (spec.regime != Regime::it_no_exp && !ex.human_explanation) continue;
        pool.push_back(&ex);
    }
    if (pool.size() < spec.shots) {
        throw StructuralError("shot pool has " + std::to_string(pool.size()) +
                              " usable examples, need " + std::to_string(spec.shots));
    }
    SplitMix64 rng(derive_seed(derive_seed(spec.shot_seed, "fewshot-sampling"), query_id));
    for (std::size_t i = 0; i < spec.shots; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(spec.shots);
    return pool;
}

std::string build_prompt(const DatasetInfo& dataset, const PromptSpec& spec,
                         std::span<const Example* const> shots, const Example& query) {
    validate_prompt_spec(spec);
    if (shots.empty()) throw StructuralError("prompts need at least one shot");

    std::string out = spec.regime == Regime::it_no_exp ? dataset.description_without_explanation
                                                       : dataset.description;
    for (const Example* shot : shots) {
        out += "\n\n";
        out += render_shot(dataset, spec, *shot);
    }
    out += "\n\n";
    if (spec.regime != Regime::pt) {
        out += render_instruction(dataset, spec);
        out += "\n\n";
    }
    out += render_fields(dataset, query);
    if (spec.regime == Regime::pt) {
        out += "\n";
        out += first_marker(dataset, spec);
        out += ":";
    }
    return out;
}

ParsedResponse parse_response(const DatasetInfo& dataset, const PromptSpec& spec,
                              std::string_view completion_text) {
    validate_prompt_spec(spec);
    std::string full;
    if (spec.regime == Regime::pt) {
        full = std::string(first_marker(dataset, spec)) + ":";
    }
    full += completion_text;

    ParsedResponse out;
    const std::size_t answer_pos = find_marker_line(full, dataset.answer_marker);
    const std::size_t expl_pos = find_marker_line(full, "EXPLANATION");

    if (answer_pos == std::string_view::npos) {
        out.flags.push_back("missing_answer_marker");
    } else {
        const std::size_t value_begin = answer_pos + dataset.answer_marker.size() + 1;
        std::size_t value_end = full.find('\n', value_begin);
        if (value_end == std::string::npos) value_end = full.size();
        out.label = match_label(dataset, std::string_view(full).substr(
                                             value_begin, value_end - value_begin));
        if (!out.label) out.flags.push_back("unrecognized_label");
    }

    if (expl_pos == std::string_view::npos) {
        out.flags.push_back("missing_explanation_marker");
    } else {
        const std::size_t expl_begin = expl_pos + std::string_view("EXPLANATION:").size();
        std::size_t expl_end = full.size();
        if (answer_pos != std::string_view::npos && answer_pos > expl_pos) {
            expl_end = answer_pos;
        }
        out.explanation =
            std::string(trim(std::string_view(full).substr(expl_begin, expl_end - expl_begin)));
        if (out.explanation.empty()) out.flags.push_back("empty_explanation");
    }

    out.parse_ok = out.label.has_value() && expl_pos != std::string_view::npos;
    return out;
}

ClassDistribution extract_class_distribution(const DatasetInfo& dataset,
                                             const PromptSpec& spec,
                                             const Completion& completion) {
    if (completion.tokens.empty()) {
        throw DistributionUnavailable("completion carries no token information");
    }

    std::string concat;
    std::vector<std::size_t> offsets;
    offsets.reserve(completion.tokens.size());
    for (const auto& token : completion.tokens) {
        offsets.push_back(concat.size());
        concat += token.token;
    }

    std::size_t answer_char = std::string::npos;
    if (spec.regime == Regime::pt && spec.order == AnswerOrder::predict_then_explain) {
        for (std::size_t i = 0; i < concat.size(); ++i) {
            if (!ascii_space(concat[i])) {
                answer_char = i;
                break;
            }
        }
    } else {
        std::string text_for_search = concat;
        std::size_t prefix = 0;
        if (spec.regime == Regime::pt) {
            const std::string virtual_head = std::string(first_marker(dataset, spec)) + ":";
            text_for_search = virtual_head + concat;
            prefix = virtual_head.size();
        }
        const std::size_t marker_pos = find_marker_line(text_for_search, dataset.answer_marker);
        if (marker_pos == std::string::npos) {
            throw DistributionUnavailable("no answer marker in completion");
        }
        std::size_t p = marker_pos + dataset.answer_marker.size() + 1;
        while (p < text_for_search.size() && ascii_space(text_for_search[p])) ++p;
        if (p >= text_for_search.size() || p < prefix) {
            throw DistributionUnavailable("no answer text after marker");
        }
        answer_char = p - prefix;
    }
    if (answer_char == std::string::npos || answer_char >= concat.size()) {
        throw DistributionUnavailable("completion has no answer position");
    }

    std::size_t token_index = completion.tokens.size() - 1;
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        if (answer_char >= offsets[i] && answer_char < offsets[i + 1]) {
            token_index = i;
            break;
        }
    }
    const auto& candidates = completion.tokens[token_index].top;
    if (candidates.empty()) {
        throw DistributionUnavailable("no candidate logprobs at the answer token");
    }

    const bool numeric_labels = std::all_of(
        dataset.labels.begin(), dataset.labels.end(), [](const std::string& label) {
            return std::all_of(label.begin(), label.end(),
                               [](char c) { return c >= '0' && c <= '9'; });
        });

    std::vector<double> masses(dataset.labels.size(), 0.0);
    for (const auto& candidate : candidates) {
        const std::string norm = ascii_lower(strip_edge_punct(trim(candidate.token)));
        if (norm.empty()) continue;
        std::size_t match = dataset.labels.size();
        std::size_t match_count = 0;
        for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
            const std::string& label = dataset.labels[i];
            const bool hit = numeric_labels
                                 ? norm == label
                                 : norm.size() <= label.size() &&
                                       ascii_lower(label).compare(0, norm.size(), norm) == 0;
            if (hit) {
                match = i;
                ++match_count;
            }
        }
        if (match_count == 1) masses[match] += std::exp(candidate.logprob);
    }

    if (std::accumulate(masses.begin(), masses.end(), 0.0) <= 0.0) {
        throw DistributionUnavailable("no label mass at the answer token");
    }
    return ClassDistribution::from_raw(dataset.labels, masses);
}

}  // namespace faithkit
