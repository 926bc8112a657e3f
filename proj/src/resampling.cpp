#include "faithkit/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "faithkit/errors.hpp"
#include "faithkit/metrics.hpp"
#include "faithkit/rng.hpp"

namespace faithkit {

double quantile_sorted(std::span<const double> sorted_values, double q) {
    if (sorted_values.empty()) throw StructuralError("quantile of an empty sample");
    if (q < 0.0 || q > 1.0) throw StructuralError("quantile level outside [0, 1]");
    const std::size_t n = sorted_values.size();
    const double h = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted_values[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::vector<std::size_t> resample_cluster_draw(std::size_t n_clusters, std::uint64_t seed,
                                               std::size_t resample_index) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(resample_index)));
    std::vector<std::size_t> draw(n_clusters);
    for (auto& d : draw) d = static_cast<std::size_t>(rng.uniform_index(n_clusters));
    return draw;
}

MetricResult clustered_bootstrap_ci(std::span<const InterventionRecord> records,
                                    const Statistic& statistic, const BootstrapSpec& spec) {
    if (records.empty()) throw StructuralError("bootstrap over an empty record set");
    if (spec.resamples == 0) throw StructuralError("bootstrap needs at least one resample");
    if (spec.confidence <= 0.0 || spec.confidence >= 1.0) {
        throw StructuralError("bootstrap confidence must lie in (0, 1)");
    }

    // Clusters ordered by first appearance in the input.
    std::unordered_map<std::string, std::size_t> cluster_of;
    std::vector<std::vector<const InterventionRecord*>> members;
    for (const auto& r : records) {
        auto [it, inserted] = cluster_of.try_emplace(r.example_id, members.size());
        if (inserted) members.emplace_back();
        members[it->second].push_back(&r);
    }
    const std::size_t n_clusters = members.size();

    RecordRefs all;
    all.reserve(records.size());
    for (const auto& r : records) all.push_back(&r);

    MetricResult out;
    out.value = statistic(all);

    std::vector<double> stats;
    stats.reserve(spec.resamples);
    std::size_t degenerate = 0;
    RecordRefs sample;
    for (std::size_t r = 0; r < spec.resamples; ++r) {
        sample.clear();
        for (std::size_t c : resample_cluster_draw(n_clusters, spec.seed, r)) {
            sample.insert(sample.end(), members[c].begin(), members[c].end());
        }
        try {
            stats.push_back(statistic(sample));
        } catch (const DegenerateStatistic&) {
            ++degenerate;
        }
    }
    out.degenerate_resamples = degenerate;
    if (degenerate * 2 > spec.resamples) {
        throw DegenerateStatistic(
            "resamples", "bootstrap degenerate on " + std::to_string(degenerate) + " of " +
                             std::to_string(spec.resamples) + " resamples");
    }

    std::sort(stats.begin(), stats.end());
    const double alpha = 1.0 - spec.confidence;
    out.ci_low = quantile_sorted(stats, alpha / 2.0);
    out.ci_high = quantile_sorted(stats, 1.0 - alpha / 2.0);
    if (degenerate > 0) out.flags.push_back("degenerate_resamples_skipped");
    return out;
}

namespace {

std::vector<double> mid_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rank(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw StructuralError("spearman over unequal lengths");
    if (xs.size() < 2) throw DegenerateStatistic("n", "spearman needs at least two observations");
    const std::vector<double> rx = mid_ranks(xs);
    const std::vector<double> ry = mid_ranks(ys);
    return pearson(rx, ry);
}

}  // namespace faithkit
