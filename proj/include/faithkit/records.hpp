#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "faithkit/distribution.hpp"

namespace faithkit {

// One evaluated intervention. `impact_continuous` and the distributions are
// absent when the endpoint returned no usable answer-token probabilities;
// such records still carry impact_discrete (from the generated labels) and
// stay usable for CT / phi-CCT / F-AUROC.
struct InterventionRecord {
    std::string example_id;
    std::string intervention_id;
    std::string inserted_word;
    std::optional<ClassDistribution> pre_dist;
    std::optional<ClassDistribution> post_dist;
    std::optional<double> impact_continuous;
    int impact_discrete = 0;
    int mention = 0;
    std::string post_explanation;
    bool parse_ok = true;
};

// Point estimate plus bootstrap interval and bookkeeping. CI bounds are set
// only by the resampling layer; every count that removed a record from the
// computation is reported rather than silently dropped.
struct MetricResult {
    double value = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::size_t n_used = 0;
    std::size_t n_excluded_parse = 0;
    std::size_t n_missing_distribution = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t degenerate_resamples = 0;
    std::vector<std::string> flags;
};

// Validates cross-field consistency on a fully populated record: when both
// distributions are present, impact_continuous must equal their TVD within
// 1e-9 and impact_discrete must match the argmax comparison.
void validate_record(const InterventionRecord& rec);

}  // namespace faithkit
