#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "faithkit/errors.hpp"
#include "faithkit/gameability.hpp"
#include "faithkit/metrics.hpp"
#include "faithkit/records.hpp"
#include "faithkit/rng.hpp"

using namespace faithkit;

namespace {

SimModel base_model() {
    SimModel m;
    m.predictor = PredictorKind::uniform_random;
    m.explainer = ExplainerKind::independent_bernoulli;
    m.mention_rate = 0.5;
    m.seed = 17;
    return m;
}

// Beta(1, 3) has the closed-form CDF 1 - (1 - x)^3, so P(X > 0.5) = 0.125
// exactly; the threshold rule then flips one record in eight on average.
const BetaSampler kImpact{1.0, 3.0};

}  // namespace

TEST_CASE("beta sampler matches closed-form moments and tails") {
    SplitMix64 rng(42);
    const std::size_t n = 100000;
    double sum = 0.0, sumsq = 0.0;
    std::size_t above_half = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = sample_beta(rng, 2.0, 5.0);
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - mean * mean;
    CHECK(std::fabs(mean - 2.0 / 7.0) < 0.01);
    CHECK(std::fabs(var - 10.0 / (49.0 * 8.0)) < 0.005);

    SplitMix64 tail_rng(43);
    for (std::size_t i = 0; i < n; ++i) {
        if (sample_beta(tail_rng, 1.0, 3.0) > 0.5) ++above_half;
    }
    const double tail = static_cast<double>(above_half) / static_cast<double>(n);
    CHECK(std::fabs(tail - 0.125) < 0.01);
}

TEST_CASE("beta sampler is deterministic and rejects bad shapes") {
    SplitMix64 a(99), b(99);
    for (int i = 0; i < 200; ++i) {
        CHECK(sample_beta(a, 0.2, 5.0) == sample_beta(b, 0.2, 5.0));
    }
    SplitMix64 rng(1);
    CHECK_THROWS_AS(sample_beta(rng, 0.0, 1.0), StructuralError);
    CHECK_THROWS_AS(sample_beta(rng, 1.0, -2.0), StructuralError);
    BetaSampler defaults;
    CHECK(defaults.alpha == 0.2);
    CHECK(defaults.beta == 5.0);
    const double d = defaults(rng);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
}

TEST_CASE("predictor and explainer names round-trip") {
    for (const auto kind : {PredictorKind::uniform_random, PredictorKind::fixed,
                            PredictorKind::oracle_like}) {
        CHECK(predictor_from_name(predictor_name(kind)) == kind);
    }
    for (const auto kind :
         {ExplainerKind::verbatim_repeater, ExplainerKind::independent_bernoulli,
          ExplainerKind::mention_if_impactful}) {
        CHECK(explainer_from_name(explainer_name(kind)) == kind);
    }
    CHECK(predictor_name(PredictorKind::oracle_like) == "oracle_like");
    CHECK(explainer_name(ExplainerKind::verbatim_repeater) == "verbatim_repeater");
    CHECK(!predictor_from_name("oracle").has_value());
    CHECK(!explainer_from_name("").has_value());
}

TEST_CASE("simulate_records is deterministic and internally consistent") {
    const SimModel model = base_model();
    const auto first = simulate_records(model, 500, kImpact);
    const auto second = simulate_records(model, 500, kImpact);
    REQUIRE(first.size() == 500);
    REQUIRE(second.size() == 500);

    std::size_t flips = 0;
    for (std::size_t i = 0; i < first.size(); ++i) {
        const auto& rec = first[i];
        CHECK(rec.example_id == "sim-" + std::to_string(i));
        CHECK(rec.intervention_id == rec.example_id + ":field:0:" + rec.inserted_word);
        CHECK(rec.parse_ok);
        REQUIRE(rec.pre_dist.has_value());
        REQUIRE(rec.post_dist.has_value());
        REQUIRE(rec.impact_continuous.has_value());
        CHECK_NOTHROW(validate_record(rec));
        // The threshold rule ties I_D to I_C with no slack.
        CHECK(rec.impact_discrete == (*rec.impact_continuous > 0.5 ? 1 : 0));
        flips += static_cast<std::size_t>(rec.impact_discrete);
        // The synthetic explanation names the word exactly when flagged.
        const bool named = rec.post_explanation.find(rec.inserted_word) != std::string::npos;
        CHECK(named == (rec.mention == 1));

        CHECK(second[i].impact_continuous == rec.impact_continuous);
        CHECK(second[i].mention == rec.mention);
        CHECK(second[i].pre_dist->probs == rec.pre_dist->probs);
        CHECK(second[i].post_dist->probs == rec.post_dist->probs);
    }
    // ~12.5% of 500 records should flip; generous band to stay seed-robust.
    CHECK(flips > 30);
    CHECK(flips < 100);

    SimModel other_seed = model;
    other_seed.seed = 18;
    const auto third = simulate_records(other_seed, 500, kImpact);
    std::size_t same = 0;
    for (std::size_t i = 0; i < third.size(); ++i) {
        if (third[i].impact_continuous == first[i].impact_continuous) ++same;
    }
    CHECK(same < 5);
}

TEST_CASE("simulate_records validates its inputs") {
    const SimModel model = base_model();
    CHECK_THROWS_AS(simulate_records(model, 0, kImpact), StructuralError);
    SimModel one_label = model;
    one_label.n_labels = 1;
    CHECK_THROWS_AS(simulate_records(one_label, 10, kImpact), StructuralError);
    SimModel bad_rate = model;
    bad_rate.mention_rate = 1.5;
    CHECK_THROWS_AS(simulate_records(bad_rate, 10, kImpact), StructuralError);
    SimModel bad_tp = model;
    bad_tp.tp_rate = -0.1;
    CHECK_THROWS_AS(simulate_records(bad_tp, 10, kImpact), StructuralError);
}

TEST_CASE("impact stream is independent of the explainer") {
    SimModel a = base_model();
    SimModel b = a;
    b.explainer = ExplainerKind::verbatim_repeater;
    SimModel c = a;
    c.explainer = ExplainerKind::mention_if_impactful;

    const auto ra = simulate_records(a, 400, kImpact);
    const auto rb = simulate_records(b, 400, kImpact);
    const auto rc = simulate_records(c, 400, kImpact);
    for (std::size_t i = 0; i < ra.size(); ++i) {
        CHECK(ra[i].impact_continuous == rb[i].impact_continuous);
        CHECK(ra[i].impact_continuous == rc[i].impact_continuous);
        CHECK(ra[i].impact_discrete == rb[i].impact_discrete);
        CHECK(ra[i].pre_dist->argmax() == rb[i].pre_dist->argmax());
        CHECK(ra[i].post_dist->argmax() == rb[i].post_dist->argmax());
    }
}

TEST_CASE("fixed and oracle-like predictors produce limiting impacts") {
    SimModel fixed = base_model();
    fixed.predictor = PredictorKind::fixed;
    const auto frozen = simulate_records(fixed, 300, kImpact);
    for (const auto& rec : frozen) {
        CHECK(*rec.impact_continuous == 0.0);
        CHECK(rec.impact_discrete == 0);
        CHECK(rec.pre_dist->argmax() == rec.post_dist->argmax());
    }
    CHECK_THROWS_AS(ct_score(frozen), DegenerateStatistic);
    CHECK_THROWS_AS(phi_cct_score(frozen), DegenerateStatistic);

    SimModel oracle = base_model();
    oracle.predictor = PredictorKind::oracle_like;
    const auto binary = simulate_records(oracle, 5000, kImpact);
    for (const auto& rec : binary) {
        const double ic = *rec.impact_continuous;
        CHECK((ic == 0.0 || ic == 1.0));
        CHECK(rec.impact_discrete == static_cast<int>(ic));
    }
    // With I_C collapsed onto I_D the two correlations are the same number.
    CHECK(cct_score(binary).value == phi_cct_score(binary).value);
}

TEST_CASE("verbatim repeater pins CT to one at every size and seed") {
    for (const std::uint64_t seed : {1, 2, 3}) {
        for (const std::size_t n : {std::size_t{37}, std::size_t{1000}, std::size_t{10000}}) {
            SimModel model = base_model();
            model.explainer = ExplainerKind::verbatim_repeater;
            model.seed = seed;
            const auto records = simulate_records(model, n, kImpact);
            for (const auto& rec : records) CHECK(rec.mention == 1);
            CHECK(ct_score(records).value == 1.0);
        }
    }
}

TEST_CASE("mention_if_impactful hits its target rates") {
    SimModel model = base_model();
    model.explainer = ExplainerKind::mention_if_impactful;
    model.tp_rate = 0.9;
    model.fp_rate = 0.1;
    model.seed = 5;
    const auto records = simulate_records(model, 100000, kImpact);
    const ConfusionRates rates = confusion_rates(records);
    CHECK(std::fabs(rates.tpr - 0.9) < 0.01);
    CHECK(std::fabs(rates.fpr - 0.1) < 0.01);
    const double positive_fraction =
        static_cast<double>(rates.positives()) / static_cast<double>(records.size());
    CHECK(std::fabs(positive_fraction - 0.125) < 0.01);
}

TEST_CASE("independent explainer decorrelates from impact at scale") {
    // CLT oracle: a correlation estimated from n independent pairs has
    // standard error ~ 1/sqrt(n); 1.96/sqrt(n) plus slack bounds |estimate|.
    const double bound = 1.96 / std::sqrt(100000.0) + 0.005;
    for (const std::uint64_t seed : {11, 12, 13}) {
        SimModel model = base_model();
        model.seed = seed;
        const auto records = simulate_records(model, 100000, kImpact);
        CHECK(std::fabs(cct_score(records).value) < bound);
        CHECK(std::fabs(phi_cct_score(records).value) < bound);
    }
}

TEST_CASE("TPR-FPR gap stays within the binomial envelope") {
    std::size_t violations = 0;
    const std::size_t trials = 100;
    for (std::size_t seed = 0; seed < trials; ++seed) {
        SimModel model = base_model();
        model.seed = seed;
        const auto records = simulate_records(model, 2000, kImpact);
        const ConfusionRates rates = confusion_rates(records);
        const double envelope =
            3.0 * std::sqrt(1.0 / static_cast<double>(rates.positives()) +
                            1.0 / static_cast<double>(rates.negatives()));
        if (std::fabs(rates.tpr - rates.fpr) >= envelope) ++violations;
    }
    CHECK(violations <= 1);
}

TEST_CASE("correlation magnitude shrinks like one over root n") {
    const std::vector<std::size_t> sizes = {1000, 4000, 16000};
    std::vector<double> mean_cct(sizes.size(), 0.0);
    std::vector<double> mean_phi(sizes.size(), 0.0);
    const std::size_t seeds = 20;
    for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
        for (std::size_t j = 0; j < sizes.size(); ++j) {
            SimModel model = base_model();
            model.seed = seed;
            const auto records = simulate_records(model, sizes[j], kImpact);
            mean_cct[j] += std::fabs(cct_score(records).value);
            mean_phi[j] += std::fabs(phi_cct_score(records).value);
        }
    }
    for (std::size_t j = 0; j < sizes.size(); ++j) {
        mean_cct[j] /= static_cast<double>(seeds);
        mean_phi[j] /= static_cast<double>(seeds);
    }
    // Quadrupling n should roughly halve the mean magnitude; the band rules
    // out O(1) (ratio 1) and O(1/n) (ratio 4) alike.
    for (std::size_t j = 0; j + 1 < sizes.size(); ++j) {
        const double cct_ratio = mean_cct[j] / mean_cct[j + 1];
        const double phi_ratio = mean_phi[j] / mean_phi[j + 1];
        MESSAGE("step " << j << ": cct ratio " << cct_ratio << ", phi ratio " << phi_ratio);
        CHECK(cct_ratio > 1.2);
        CHECK(cct_ratio < 3.4);
        CHECK(phi_ratio > 1.2);
        CHECK(phi_ratio < 3.4);
    }
}

TEST_CASE("five-level sweep spans intensities over one impact stream") {
    SimModel model = base_model();
    model.seed = 3;
    const auto sweep = simulate_fauroc_sweep(model, 20000, kImpact);
    REQUIRE(sweep.points.size() == 5);
    for (int level = 1; level <= 5; ++level) {
        const auto& pt = sweep.points[static_cast<std::size_t>(level - 1)];
        CHECK(pt.label == "level-" + std::to_string(level));
        // Blind mentions put every level near the diagonal at its own rate.
        const double rate = static_cast<double>(level) / 6.0;
        CHECK(std::fabs(pt.tpr - rate) < 0.03);
        CHECK(std::fabs(pt.fpr - rate) < 0.03);
    }
    CHECK(std::fabs(sweep.f_auroc - 0.5) < 0.02);
}

TEST_CASE("sweep separates informative from verbatim explainers") {
    SimModel informative = base_model();
    informative.explainer = ExplainerKind::mention_if_impactful;
    informative.tp_rate = 0.9;
    informative.fp_rate = 0.1;
    const auto good = simulate_fauroc_sweep(informative, 20000, kImpact);
    CHECK(good.f_auroc > 0.85);
    for (std::size_t j = 0; j + 1 < good.points.size(); ++j) {
        CHECK(good.points[j].fpr <= good.points[j + 1].fpr + 1e-12);
    }

    // The repeater saturates every level at (1, 1): the hull collapses to
    // the floor instead of rewarding the always-mention strategy.
    SimModel repeater = base_model();
    repeater.explainer = ExplainerKind::verbatim_repeater;
    const auto gamed = simulate_fauroc_sweep(repeater, 20000, kImpact);
    for (const auto& pt : gamed.points) {
        CHECK(pt.tpr == 1.0);
        CHECK(pt.fpr == 1.0);
    }
    CHECK(gamed.f_auroc == doctest::Approx(0.5).epsilon(1e-12));

    SimModel fixed = base_model();
    fixed.predictor = PredictorKind::fixed;
    CHECK_THROWS_AS(simulate_fauroc_sweep(fixed, 1000, kImpact), DegenerateStatistic);
}

TEST_CASE("gameability reports expose the sweep") {
    SimModel repeater = base_model();
    repeater.explainer = ExplainerKind::verbatim_repeater;
    const std::vector<std::size_t> sizes = {100, 1000, 10000};
    const auto report = estimate_gameability("ct", repeater, sizes, kImpact);
    CHECK(report.metric_name == "ct");
    CHECK(report.sample_sizes == sizes);
    REQUIRE(report.estimates_by_n.size() == sizes.size());
    for (const auto& estimate : report.estimates_by_n) {
        REQUIRE(estimate.has_value());
        CHECK(*estimate == 1.0);
    }
    REQUIRE(report.alpha_estimate.has_value());
    CHECK(*report.alpha_estimate == 1.0);

    const std::vector<std::size_t> two_sizes = {100, 100000};
    const auto phi_report = estimate_gameability("phi-cct", base_model(), two_sizes, kImpact);
    REQUIRE(phi_report.estimates_by_n.size() == 2);
    REQUIRE(phi_report.alpha_estimate.has_value());
    CHECK(*phi_report.alpha_estimate == *phi_report.estimates_by_n.back());
    CHECK(std::fabs(*phi_report.alpha_estimate) < 0.02);

    const auto cct_report = estimate_gameability("cct", base_model(), two_sizes, kImpact);
    REQUIRE(cct_report.alpha_estimate.has_value());
    CHECK(std::fabs(*cct_report.alpha_estimate) < 0.02);

    const std::vector<std::size_t> one_size = {100000};
    const auto hull_report = estimate_gameability("f-auroc", base_model(), one_size, kImpact);
    REQUIRE(hull_report.alpha_estimate.has_value());
    CHECK(std::fabs(*hull_report.alpha_estimate - 0.5) <= 0.02);
}

TEST_CASE("degenerate metrics stay missing instead of fabricated") {
    SimModel fixed = base_model();
    fixed.predictor = PredictorKind::fixed;
    const std::vector<std::size_t> sizes = {50, 100};
    const auto report = estimate_gameability("ct", fixed, sizes, kImpact);
    REQUIRE(report.estimates_by_n.size() == 2);
    CHECK(!report.estimates_by_n[0].has_value());
    CHECK(!report.estimates_by_n[1].has_value());
    CHECK(!report.alpha_estimate.has_value());

    const auto hull = estimate_gameability("f-auroc", fixed, sizes, kImpact);
    CHECK(!hull.alpha_estimate.has_value());

    CHECK_THROWS_AS(estimate_gameability("auroc", base_model(), sizes, kImpact),
                    StructuralError);
    const std::vector<std::size_t> empty;
    CHECK_THROWS_AS(estimate_gameability("ct", base_model(), empty, kImpact), StructuralError);
}

TEST_CASE("reports serialize with explicit nulls") {
    GameabilityReport report;
    report.metric_name = "phi-cct";
    report.sample_sizes = {10, 1000};
    report.estimates_by_n = {std::nullopt, 0.25};
    report.alpha_estimate = 0.25;
    const auto parsed = nlohmann::json::parse(serialize_report(report));
    CHECK(parsed["metric_name"] == "phi-cct");
    CHECK(parsed["alpha_estimate"] == doctest::Approx(0.25));
    CHECK(parsed["sample_sizes"] == nlohmann::json({10, 1000}));
    CHECK(parsed["estimates_by_n"][0].is_null());
    CHECK(parsed["estimates_by_n"][1] == doctest::Approx(0.25));

    GameabilityReport missing;
    missing.metric_name = "ct";
    missing.sample_sizes = {10};
    missing.estimates_by_n = {std::nullopt};
    const auto parsed_missing = nlohmann::json::parse(serialize_report(missing));
    CHECK(parsed_missing["alpha_estimate"].is_null());
}
