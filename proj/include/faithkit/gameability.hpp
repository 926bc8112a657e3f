#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faithkit/records.hpp"
#include "faithkit/rng.hpp"
#include "faithkit/roc.hpp"

namespace faithkit {

// Beta(alpha, beta) variate via Marsaglia-Tsang gamma sampling on the
// portable generator; used for synthetic continuous impacts.
double sample_beta(SplitMix64& rng, double alpha, double beta);

struct BetaSampler {
    double alpha = 0.2;
    double beta = 5.0;

    double operator()(SplitMix64& rng) const { return sample_beta(rng, alpha, beta); }
};

enum class PredictorKind {
    uniform_random,  // uniform pre class; flips to a uniform other class
    fixed,           // identical pre/post: every impact is zero
    oracle_like,     // impacts collapse to {0,1}: the degenerate limit
};

enum class ExplainerKind {
    verbatim_repeater,      // always mentions the inserted word
    independent_bernoulli,  // mention ~ Bernoulli(mention_rate), blind to impact
    mention_if_impactful,   // mention ~ Bernoulli(tp_rate if flipped else fp_rate)
};

std::string_view predictor_name(PredictorKind kind);
std::string_view explainer_name(ExplainerKind kind);
std::optional<PredictorKind> predictor_from_name(std::string_view name);
std::optional<ExplainerKind> explainer_from_name(std::string_view name);

// The simulated model pair (predictor, explainer) used to probe how far a
// metric can be pushed while the explainer stays independent of the inputs.
struct SimModel {
    PredictorKind predictor = PredictorKind::uniform_random;
    ExplainerKind explainer = ExplainerKind::independent_bernoulli;
    double mention_rate = 0.5;  // independent_bernoulli
    double tp_rate = 0.9;       // mention_if_impactful, flipped records
    double fp_rate = 0.1;       // mention_if_impactful, unflipped records
    std::size_t n_labels = 3;
    std::uint64_t seed = 0;
};

// n synthetic records: continuous impact from the sampler, discrete impact
// thresholded at 0.5, mentions drawn by the explainer from a separate stream
// (so two models differing only in explainer share their impacts).
std::vector<InterventionRecord> simulate_records(const SimModel& model, std::size_t n,
                                                 const BetaSampler& impact);

struct SweepResult {
    std::vector<RocPoint> points;
    double f_auroc = 0.0;
};

// Five explainer intensities over one shared impact stream, mirroring the
// length-instruction sweep: the confusion point of each level feeds the hull.
SweepResult simulate_fauroc_sweep(const SimModel& model, std::size_t n,
                                  const BetaSampler& impact);

struct GameabilityReport {
    std::string metric_name;
    std::optional<double> alpha_estimate;
    std::vector<std::size_t> sample_sizes;
    // One entry per sample size; degenerate metrics stay unset, never faked.
    std::vector<std::optional<double>> estimates_by_n;
};

// Evaluates one metric ("ct", "cct", "phi-cct", "f-auroc") on simulated
// records at each sample size; alpha_estimate is the largest-n defined value.
GameabilityReport estimate_gameability(std::string_view metric_name, const SimModel& model,
                                       std::span<const std::size_t> sample_sizes,
                                       const BetaSampler& impact);

std::string serialize_report(const GameabilityReport& report);

}  // namespace faithkit
