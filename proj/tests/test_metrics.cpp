#include <doctest.h>

#include <cmath>
#include <vector>

#include "faithkit/distribution.hpp"
#include "faithkit/errors.hpp"
#include "faithkit/metrics.hpp"
#include "faithkit/rng.hpp"
#include "test_support.hpp"

using namespace faithkit;
using testsupport::pearson_oracle;
using testsupport::rec;

namespace {

ClassDistribution dist3(double a, double b, double c) {
    return ClassDistribution::from_raw({"entailment", "neutral", "contradiction"}, {a, b, c});
}

}  // namespace

TEST_CASE("from_raw renormalizes and validates") {
    auto d = ClassDistribution::from_raw({"a", "b", "c"}, {2.0, 6.0, 2.0});
    CHECK(d.probs[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(d.probs[1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(d.raw_probs[1] == 6.0);
    double sum = d.probs[0] + d.probs[1] + d.probs[2];
    CHECK(std::fabs(sum - 1.0) < 1e-9);

    CHECK_THROWS_AS(ClassDistribution::from_raw({}, {}), StructuralError);
    CHECK_THROWS_AS(ClassDistribution::from_raw({"a"}, {1.0, 2.0}), StructuralError);
    CHECK_THROWS_AS(ClassDistribution::from_raw({"a", "a"}, {1.0, 2.0}), StructuralError);
    CHECK_THROWS_AS(ClassDistribution::from_raw({"a", "b"}, {1.0, -0.5}), StructuralError);
    CHECK_THROWS_AS(ClassDistribution::from_raw({"a", "b"}, {0.0, 0.0}), StructuralError);
}

TEST_CASE("argmax ties break to the lowest index") {
    auto d = ClassDistribution::from_raw({"a", "b", "c"}, {0.4, 0.4, 0.2});
    CHECK(d.argmax() == 0);
    auto e = ClassDistribution::from_raw({"a", "b", "c"}, {0.2, 0.4, 0.4});
    CHECK(e.argmax() == 1);
}

TEST_CASE("tvd on the reference rows") {
    // Near-certain 'neutral' shifting to near-certain 'contradiction'.
    CHECK(tvd(dist3(0.0, 1.0, 0.0), dist3(0.0, 0.028, 0.972)) ==
          doctest::Approx(0.972).epsilon(1e-12));
    // Near-certain 'neutral' shifting to dominant 'entailment' (masses sum to 0.999).
    double row2 = tvd(dist3(0.002, 0.998, 0.0), dist3(0.938, 0.061, 0.0));
    CHECK(std::fabs(row2 - 0.94) < 0.005);
}

TEST_CASE("tvd properties") {
    auto p = dist3(0.1, 0.7, 0.2);
    auto q = dist3(0.5, 0.25, 0.25);
    CHECK(tvd(p, p) == 0.0);
    CHECK(tvd(p, q) == tvd(q, p));
    CHECK(tvd(dist3(1, 0, 0), dist3(0, 1, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    auto other = ClassDistribution::from_raw({"x", "y", "z"}, {1.0, 0.0, 0.0});
    CHECK_THROWS_AS(tvd(p, other), StructuralError);

    SplitMix64 rng(11);
    for (int i = 0; i < 200; ++i) {
        auto a = dist3(rng.uniform01() + 1e-6, rng.uniform01(), rng.uniform01());
        auto b = dist3(rng.uniform01() + 1e-6, rng.uniform01(), rng.uniform01());
        double v = tvd(a, b);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
        CHECK(v == tvd(b, a));
    }
}

TEST_CASE("impact_discrete follows the argmax tie-break") {
    CHECK(impact_discrete(dist3(0.2, 0.8, 0.0), dist3(0.9, 0.1, 0.0)) == 1);
    CHECK(impact_discrete(dist3(0.2, 0.8, 0.0), dist3(0.1, 0.8, 0.1)) == 0);
    // Post ties at the top: lowest index wins, so argmax moves to 'entailment'.
    CHECK(impact_discrete(dist3(0.2, 0.8, 0.0), dist3(0.5, 0.5, 0.0)) == 1);
}

TEST_CASE("ct_score is the mention rate among impactful records") {
    std::vector<InterventionRecord> rs = {
        rec("e1", "i1", 1, 1), rec("e1", "i2", 0, 1), rec("e2", "i3", 1, 1),
        rec("e2", "i4", 1, 0), rec("e3", "i5", 0, 0),
    };
    auto m = ct_score(rs);
    CHECK(m.value == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.positives == 3);
    CHECK(m.negatives == 2);
    CHECK(m.n_excluded_parse == 0);
}

TEST_CASE("parse failures are excluded and tallied") {
    std::vector<InterventionRecord> rs = {
        rec("e1", "i1", 1, 1), rec("e1", "i2", 0, 1, std::nullopt, false),
        rec("e2", "i3", 0, 0),
    };
    auto m = ct_score(rs);
    CHECK(m.value == 1.0);
    CHECK(m.n_used == 2);
    CHECK(m.n_excluded_parse == 1);
}

TEST_CASE("ct degenerates without impactful records") {
    std::vector<InterventionRecord> rs = {rec("e1", "i1", 1, 0), rec("e1", "i2", 0, 0)};
    CHECK_THROWS_AS(ct_score(rs), DegenerateStatistic);
    std::vector<InterventionRecord> empty;
    CHECK_THROWS_AS(ct_score(empty), DegenerateStatistic);
}

TEST_CASE("ct equals the confusion-matrix TPR exactly") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<InterventionRecord> rs;
        for (int i = 0; i < 60; ++i) {
            rs.push_back(rec("e" + std::to_string(i % 13), "i" + std::to_string(i),
                             rng.uniform_index(2) ? 1 : 0, rng.uniform_index(2) ? 1 : 0));
        }
        rs.push_back(rec("e0", "ipos", 1, 1));
        rs.push_back(rec("e0", "ineg", 0, 0));
        CHECK(ct_score(rs).value == confusion_rates(rs).tpr);
    }
}

TEST_CASE("cct reproduces the worked correlation example") {
    std::vector<InterventionRecord> rs = {
        rec("e1", "i1", 1, 1, 0.9), rec("e1", "i2", 1, 0, 0.5),
        rec("e2", "i3", 0, 0, 0.5), rec("e2", "i4", 0, 0, 0.1),
    };
    CHECK(cct_score(rs).value == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("cct skips records without distributions and tallies them") {
    std::vector<InterventionRecord> rs = {
        rec("e1", "i1", 1, 1, 0.9), rec("e1", "i2", 0, 0, 0.1),
        rec("e2", "i3", 1, 0, std::nullopt),
    };
    auto m = cct_score(rs);
    CHECK(m.n_used == 2);
    CHECK(m.n_missing_distribution == 1);
}

TEST_CASE("cct degenerates on constant inputs") {
    std::vector<InterventionRecord> all_mentioned = {
        rec("e1", "i1", 1, 1, 0.9), rec("e1", "i2", 1, 0, 0.1),
    };
    CHECK_THROWS_AS(cct_score(all_mentioned), DegenerateStatistic);
    std::vector<InterventionRecord> const_impact = {
        rec("e1", "i1", 1, 1, 0.5), rec("e1", "i2", 0, 1, 0.5),
    };
    CHECK_THROWS_AS(cct_score(const_impact), DegenerateStatistic);
    try {
        cct_score(const_impact);
    } catch (const DegenerateStatistic& ex) {
        CHECK(ex.variable() == "impact_continuous");
    }
}

TEST_CASE("phi matches the confusion-matrix value on a known table") {
    // TP=40, FN=10, FP=10, TN=40 -> phi = 0.6.
    std::vector<InterventionRecord> rs;
    int n = 0;
    auto add = [&](int mention, int impact, int count) {
        for (int i = 0; i < count; ++i) {
            rs.push_back(rec("e" + std::to_string(n % 10), "i" + std::to_string(n), mention, impact));
            ++n;
        }
    };
    add(1, 1, 40);
    add(0, 1, 10);
    add(1, 0, 10);
    add(0, 0, 40);
    CHECK(phi_cct_score(rs).value == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("phi equals a generic Pearson on random binary data") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 10 + rng.uniform_index(490);
        std::vector<InterventionRecord> rs;
        std::vector<double> e, id;
        for (std::size_t i = 0; i < n; ++i) {
            int m = rng.uniform01() < 0.4 ? 1 : 0;
            int d = rng.uniform01() < 0.3 ? 1 : 0;
            rs.push_back(rec("e" + std::to_string(i % 17), "i" + std::to_string(i), m, d));
            e.push_back(m);
            id.push_back(d);
        }
        // Guarantee both values of both variables.
        rs.push_back(rec("ex", "a", 1, 1));
        rs.push_back(rec("ex", "b", 0, 0));
        rs.push_back(rec("ex", "c", 1, 0));
        rs.push_back(rec("ex", "d", 0, 1));
        e.insert(e.end(), {1, 0, 1, 0});
        id.insert(id.end(), {1, 0, 0, 1});
        CHECK(phi_cct_score(rs).value == doctest::Approx(pearson_oracle(e, id)).epsilon(1e-12));
    }
}

TEST_CASE("cct equals phi when continuous impact is already binary") {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<InterventionRecord> rs;
        for (int i = 0; i < 80; ++i) {
            int d = rng.uniform01() < 0.4 ? 1 : 0;
            int m = rng.uniform01() < (d ? 0.7 : 0.3) ? 1 : 0;
            rs.push_back(
                rec("e" + std::to_string(i % 11), "i" + std::to_string(i), m, d, double(d)));
        }
        rs.push_back(rec("ex", "a", 1, 1, 1.0));
        rs.push_back(rec("ex", "b", 0, 0, 0.0));
        rs.push_back(rec("ex", "c", 1, 0, 0.0));
        rs.push_back(rec("ex", "d", 0, 1, 1.0));
        CHECK(std::fabs(cct_score(rs).value - phi_cct_score(rs).value) < 1e-12);
    }
}

TEST_CASE("confusion_rates counts the full table") {
    std::vector<InterventionRecord> rs = {
        rec("e1", "i1", 1, 1), rec("e1", "i2", 0, 1), rec("e2", "i3", 1, 0),
        rec("e2", "i4", 0, 0), rec("e3", "i5", 0, 0),
    };
    auto c = confusion_rates(rs);
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 2);
    CHECK(c.tpr == 0.5);
    CHECK(c.fpr == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(c.k() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    std::vector<InterventionRecord> onesided = {rec("e1", "i1", 1, 1)};
    CHECK_THROWS_AS(confusion_rates(onesided), DegenerateStatistic);
}

TEST_CASE("metric values ignore record order") {
    std::vector<InterventionRecord> rs;
    SplitMix64 rng(31);
    for (int i = 0; i < 40; ++i) {
        int d = rng.uniform01() < 0.5 ? 1 : 0;
        rs.push_back(rec("e" + std::to_string(i % 7), "i" + std::to_string(i),
                         rng.uniform01() < 0.5 ? 1 : 0, d, 0.1 + 0.8 * rng.uniform01()));
    }
    rs.push_back(rec("ex", "a", 1, 1, 0.9));
    rs.push_back(rec("ex", "b", 0, 0, 0.1));
    rs.push_back(rec("ex", "c", 0, 1, 0.8));
    rs.push_back(rec("ex", "d", 1, 0, 0.2));
    auto shuffled = rs;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
    }
    CHECK(ct_score(rs).value == doctest::Approx(ct_score(shuffled).value).epsilon(1e-12));
    CHECK(cct_score(rs).value == doctest::Approx(cct_score(shuffled).value).epsilon(1e-12));
    CHECK(phi_cct_score(rs).value ==
          doctest::Approx(phi_cct_score(shuffled).value).epsilon(1e-12));
}

TEST_CASE("validate_record enforces cross-field consistency") {
    auto good = rec("e1", "i1", 1, 1);
    CHECK_NOTHROW(validate_record(good));

    auto with_dists = rec("e1", "i1", 1, 1);
    with_dists.pre_dist = dist3(0.0, 1.0, 0.0);
    with_dists.post_dist = dist3(0.0, 0.028, 0.972);
    with_dists.impact_continuous = 0.972;
    CHECK_NOTHROW(validate_record(with_dists));

    auto bad_tvd = with_dists;
    bad_tvd.impact_continuous = 0.5;
    CHECK_THROWS_AS(validate_record(bad_tvd), StructuralError);

    auto bad_flip = with_dists;
    bad_flip.impact_discrete = 0;
    CHECK_THROWS_AS(validate_record(bad_flip), StructuralError);

    auto orphan_ic = rec("e1", "i1", 1, 1, 0.3);
    CHECK_THROWS_AS(validate_record(orphan_ic), StructuralError);

    auto out_of_range = with_dists;
    out_of_range.impact_continuous = 1.5;
    CHECK_THROWS_AS(validate_record(out_of_range), StructuralError);
}
