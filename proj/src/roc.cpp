#include "faithkit/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "faithkit/errors.hpp"

namespace faithkit {

ClassBalance ClassBalance::from_counts(std::size_t positives, std::size_t negatives) {
    if (positives == 0 || negatives == 0) {
        throw StructuralError("class balance needs at least one record of each class");
    }
    return {static_cast<double>(positives) / static_cast<double>(negatives)};
}

ClassBalance ClassBalance::from_ratio(double k) {
    if (!std::isfinite(k) || k <= 0.0) throw StructuralError("class balance ratio must be positive");
    return {k};
}

namespace {

using XY = std::pair<double, double>;

double cross(const XY& o, const XY& a, const XY& b) {
    return (a.first - o.first) * (b.second - o.second) -
           (a.second - o.second) * (b.first - o.first);
}

// Andrew's monotone chain; strict turns only, so collinear points are dropped.
std::vector<XY> convex_hull(std::vector<XY> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<XY> hull;
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), pts[i]) <= 0.0) {
            hull.pop_back();
        }
        hull.push_back(pts[i]);
    }
    const std::size_t lower_size = hull.size() + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (hull.size() >= lower_size && cross(hull[hull.size() - 2], hull.back(), pts[i]) <= 0.0) {
            hull.pop_back();
        }
        hull.push_back(pts[i]);
    }
    hull.pop_back();
    return hull;
}

double polygon_area(const std::vector<XY>& poly) {
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const XY& a = poly[i];
        const XY& b = poly[(i + 1) % poly.size()];
        twice += a.first * b.second - b.first * a.second;
    }
    return std::fabs(twice) / 2.0;
}

}  // namespace

double f_auroc(std::span<const RocPoint> points) {
    if (points.empty()) throw StructuralError("f_auroc needs at least one point");
    std::vector<XY> pts;
    pts.reserve(points.size() + 3);
    for (const auto& p : points) {
        if (!std::isfinite(p.fpr) || !std::isfinite(p.tpr) || p.fpr < 0.0 || p.fpr > 1.0 ||
            p.tpr < 0.0 || p.tpr > 1.0) {
            throw StructuralError("ROC point outside the unit square");
        }
        pts.emplace_back(p.fpr, p.tpr);
    }
    pts.emplace_back(0.0, 0.0);
    pts.emplace_back(1.0, 1.0);
    pts.emplace_back(1.0, 0.0);
    return polygon_area(convex_hull(std::move(pts)));
}

double phi_from_rates(double tpr, double fpr, const ClassBalance& balance) {
    if (!std::isfinite(tpr) || tpr < 0.0 || tpr > 1.0 || !std::isfinite(fpr) || fpr < 0.0 ||
        fpr > 1.0) {
        throw StructuralError("rates must lie in [0, 1]");
    }
    if (!std::isfinite(balance.k) || balance.k <= 0.0) {
        throw StructuralError("class balance ratio must be positive");
    }
    const double k = balance.k;
    const double denom = (tpr * k + fpr) * ((1.0 - tpr) * k + (1.0 - fpr));
    if (denom <= 0.0) {
        throw DegenerateStatistic("rates", "phi undefined: degenerate confusion matrix");
    }
    return std::sqrt(k) * (tpr - fpr) / std::sqrt(denom);
}

std::vector<PhiGridCell> phi_contour_grid(const ClassBalance& balance, std::size_t resolution) {
    if (resolution < 2) throw StructuralError("grid resolution must be at least 2");
    std::vector<PhiGridCell> grid;
    grid.reserve(resolution * resolution);
    const double step = 1.0 / static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            PhiGridCell cell;
            cell.fpr = static_cast<double>(j) * step;
            cell.tpr = static_cast<double>(i) * step;
            try {
                cell.phi = phi_from_rates(cell.tpr, cell.fpr, balance);
            } catch (const DegenerateStatistic&) {
                cell.phi = std::numeric_limits<double>::quiet_NaN();
            }
            grid.push_back(cell);
        }
    }
    return grid;
}

}  // namespace faithkit
