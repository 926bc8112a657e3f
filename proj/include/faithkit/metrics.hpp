#pragma once

#include <span>

#include "faithkit/records.hpp"

namespace faithkit {

// Confusion counts of mention against impact_discrete, over parseable records.
struct ConfusionRates {
    double tpr = 0.0;
    double fpr = 0.0;
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
    std::size_t positives() const { return tp + fn; }
    std::size_t negatives() const { return fp + tn; }
    // Class imbalance ratio k = positives / negatives.
    double k() const { return static_cast<double>(positives()) / static_cast<double>(negatives()); }
};

// Sample Pearson correlation; throws DegenerateStatistic when either input
// has zero variance or fewer than two values are given.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Mention rate among impactful interventions (equals ConfusionRates::tpr on
// the same records). Records with parse_ok == false are excluded and tallied.
MetricResult ct_score(std::span<const InterventionRecord> records);

// Pearson correlation between mention and continuous impact. Records without
// a usable distribution are additionally excluded and tallied.
MetricResult cct_score(std::span<const InterventionRecord> records);

// Pearson correlation between the two binary variables (phi coefficient).
MetricResult phi_cct_score(std::span<const InterventionRecord> records);

// Throws DegenerateStatistic unless both impact classes are present.
ConfusionRates confusion_rates(std::span<const InterventionRecord> records);

}  // namespace faithkit
