#include "faithkit/distribution.hpp"

#include <cmath>
#include <unordered_set>

#include "faithkit/errors.hpp"

namespace faithkit {

ClassDistribution ClassDistribution::from_raw(std::vector<std::string> labels,
                                              std::vector<double> raw) {
    if (labels.empty()) throw StructuralError("distribution has no labels");
    if (labels.size() != raw.size()) {
        throw StructuralError("distribution has " + std::to_string(labels.size()) +
                              " labels but " + std::to_string(raw.size()) + " masses");
    }
    std::unordered_set<std::string> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l).second) throw StructuralError("duplicate label '" + l + "'");
    }
    double total = 0.0;
    for (double m : raw) {
        if (!std::isfinite(m) || m < 0.0) throw StructuralError("label mass must be finite and non-negative");
        total += m;
    }
    if (total <= 0.0) throw StructuralError("distribution has zero total mass");

    ClassDistribution d;
    d.labels = std::move(labels);
    d.raw_probs = raw;
    d.probs.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) d.probs[i] = raw[i] / total;
    return d;
}

std::size_t ClassDistribution::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return best;
}

double tvd(const ClassDistribution& a, const ClassDistribution& b) {
    if (a.labels != b.labels) throw StructuralError("tvd over mismatched label sets");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.probs.size(); ++i) sum += std::fabs(a.probs[i] - b.probs[i]);
    return 0.5 * sum;
}

int impact_discrete(const ClassDistribution& pre, const ClassDistribution& post) {
    if (pre.labels != post.labels) throw StructuralError("impact over mismatched label sets");
    return pre.argmax() != post.argmax() ? 1 : 0;
}

}  // namespace faithkit
