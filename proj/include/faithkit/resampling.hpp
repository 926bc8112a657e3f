#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "faithkit/records.hpp"

namespace faithkit {

struct BootstrapSpec {
    std::size_t resamples = 100;
    double confidence = 0.95;
    std::uint64_t seed = 0;
};

using RecordRefs = std::vector<const InterventionRecord*>;
using Statistic = std::function<double(const RecordRefs&)>;

// Empirical quantile with linear interpolation between order statistics
// (numpy's default rule). `sorted_values` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted_values, double q);

// Cluster draws for resample r, derived purely from (seed, r): each resample
// draws n_clusters cluster indices uniformly with replacement. Exposed so
// multi-run aggregations resample the same clusters the same way.
std::vector<std::size_t> resample_cluster_draw(std::size_t n_clusters, std::uint64_t seed,
                                               std::size_t resample_index);

// Percentile bootstrap over whole clusters keyed by example_id: a resample
// keeps every record of each drawn cluster, duplicates included. Resamples
// on which the statistic is degenerate are skipped and counted; more than
// half degenerate raises DegenerateStatistic. The point estimate is the
// statistic on the full record set.
MetricResult clustered_bootstrap_ci(std::span<const InterventionRecord> records,
                                    const Statistic& statistic, const BootstrapSpec& spec);

// Spearman rank correlation via mid-ranks and Pearson.
double spearman_rank(std::span<const double> xs, std::span<const double> ys);

}  // namespace faithkit
