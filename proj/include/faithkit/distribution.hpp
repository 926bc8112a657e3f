#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace faithkit {

// Probability distribution over a fixed, ordered label set. `probs` is
// renormalized to sum to 1 (within 1e-9); `raw_probs` keeps the values as
// extracted from the model for auditing.
struct ClassDistribution {
    std::vector<std::string> labels;
    std::vector<double> probs;
    std::vector<double> raw_probs;

    // Validates labels (non-empty, unique), masses (finite, non-negative,
    // positive total) and renormalizes. Throws StructuralError otherwise.
    static ClassDistribution from_raw(std::vector<std::string> labels, std::vector<double> raw);

    // Index of the most probable label; exact ties go to the lowest index.
    std::size_t argmax() const;
};

// Total variation distance between two distributions over the same ordered
// label set. Throws StructuralError if the label sets differ.
double tvd(const ClassDistribution& a, const ClassDistribution& b);

// 1 iff the argmax label changed, using the shared lowest-index tie-break.
int impact_discrete(const ClassDistribution& pre, const ClassDistribution& post);

}  // namespace faithkit
