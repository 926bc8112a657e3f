#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace faithkit {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    std::string label;
};

// Class imbalance ratio k = positives / negatives.
struct ClassBalance {
    double k = 1.0;
    static ClassBalance from_counts(std::size_t positives, std::size_t negatives);
    static ClassBalance from_ratio(double k);
};

// Area of the convex hull of the given points plus the anchors (0,0), (1,1)
// and (1,0). No parametric curve is fitted; the result is always in
// [0.5, 1]. Duplicate points and input order do not matter. Coordinates must
// lie in [0, 1] and at least one point must be given.
double f_auroc(std::span<const RocPoint> points);

// Phi coefficient from (TPR, FPR) at class balance k:
//   sqrt(k) * (TPR - FPR) / sqrt((TPR*k + FPR) * ((1-TPR)*k + (1-FPR)))
// Throws StructuralError for rates outside [0,1] or k <= 0, and
// DegenerateStatistic when the denominator vanishes (the all-0 / all-1
// corners, where the underlying confusion matrix is degenerate).
double phi_from_rates(double tpr, double fpr, const ClassBalance& balance);

struct PhiGridCell {
    double fpr = 0.0;
    double tpr = 0.0;
    double phi = 0.0;  // NaN at degenerate corners
};

// Uniform resolution x resolution grid over [0,1]^2 (endpoints included),
// with NaN sentinels where phi is degenerate. resolution must be >= 2.
std::vector<PhiGridCell> phi_contour_grid(const ClassBalance& balance, std::size_t resolution);

}  // namespace faithkit
