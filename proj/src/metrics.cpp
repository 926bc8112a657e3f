#include "faithkit/metrics.hpp"

#include <cmath>
#include <vector>

#include "faithkit/distribution.hpp"
#include "faithkit/errors.hpp"

namespace faithkit {

void validate_record(const InterventionRecord& rec) {
    if (rec.example_id.empty()) throw StructuralError("record without example_id");
    if (rec.intervention_id.empty()) throw StructuralError("record without intervention_id");
    if (rec.mention != 0 && rec.mention != 1) throw StructuralError("mention must be 0 or 1");
    if (rec.impact_discrete != 0 && rec.impact_discrete != 1) {
        throw StructuralError("impact_discrete must be 0 or 1");
    }
    if (rec.impact_continuous) {
        double v = *rec.impact_continuous;
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw StructuralError("impact_continuous outside [0, 1] in " + rec.intervention_id);
        }
    }
    if (rec.pre_dist && rec.post_dist) {
        if (!rec.impact_continuous) {
            throw StructuralError("distributions present but impact_continuous missing in " +
                                  rec.intervention_id);
        }
        if (std::fabs(*rec.impact_continuous - tvd(*rec.pre_dist, *rec.post_dist)) > 1e-9) {
            throw StructuralError("impact_continuous does not match TVD in " + rec.intervention_id);
        }
        if (rec.impact_discrete != impact_discrete(*rec.pre_dist, *rec.post_dist)) {
            throw StructuralError("impact_discrete does not match argmax flip in " +
                                  rec.intervention_id);
        }
    } else if (rec.impact_continuous && !(rec.pre_dist && rec.post_dist)) {
        throw StructuralError("impact_continuous present without both distributions in " +
                              rec.intervention_id);
    }
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw StructuralError("pearson over unequal lengths");
    const std::size_t n = xs.size();
    if (n < 2) throw DegenerateStatistic("n", "pearson needs at least two observations");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw DegenerateStatistic("x", "pearson with zero variance in x");
    if (syy == 0.0) throw DegenerateStatistic("y", "pearson with zero variance in y");
    return sxy / std::sqrt(sxx * syy);
}

namespace {

struct Filtered {
    std::vector<const InterventionRecord*> recs;
    std::size_t excluded_parse = 0;
};

Filtered parseable(std::span<const InterventionRecord> records) {
    Filtered f;
    f.recs.reserve(records.size());
    for (const auto& r : records) {
        if (r.parse_ok) {
            f.recs.push_back(&r);
        } else {
            ++f.excluded_parse;
        }
    }
    return f;
}

ConfusionRates count_confusion(const std::vector<const InterventionRecord*>& recs) {
    ConfusionRates c;
    for (const auto* r : recs) {
        if (r->impact_discrete == 1) {
            r->mention ? ++c.tp : ++c.fn;
        } else {
            r->mention ? ++c.fp : ++c.tn;
        }
    }
    if (c.positives() == 0) {
        throw DegenerateStatistic("impact_discrete", "no impactful interventions in the sample");
    }
    if (c.negatives() == 0) {
        throw DegenerateStatistic("impact_discrete", "no unimpactful interventions in the sample");
    }
    c.tpr = static_cast<double>(c.tp) / static_cast<double>(c.positives());
    c.fpr = static_cast<double>(c.fp) / static_cast<double>(c.negatives());
    return c;
}

}  // namespace

MetricResult ct_score(std::span<const InterventionRecord> records) {
    Filtered f = parseable(records);
    MetricResult out;
    out.n_excluded_parse = f.excluded_parse;
    out.n_used = f.recs.size();
    std::size_t tp = 0, pos = 0;
    for (const auto* r : f.recs) {
        if (r->impact_discrete == 1) {
            ++pos;
            tp += static_cast<std::size_t>(r->mention);
        }
    }
    if (f.recs.empty()) throw DegenerateStatistic("records", "CT over an empty record set");
    if (pos == 0) throw DegenerateStatistic("impact_discrete", "CT with no impactful interventions");
    out.positives = pos;
    out.negatives = f.recs.size() - pos;
    out.value = static_cast<double>(tp) / static_cast<double>(pos);
    return out;
}

MetricResult cct_score(std::span<const InterventionRecord> records) {
    Filtered f = parseable(records);
    MetricResult out;
    out.n_excluded_parse = f.excluded_parse;
    std::vector<double> e, ic;
    for (const auto* r : f.recs) {
        if (!r->impact_continuous) {
            ++out.n_missing_distribution;
            continue;
        }
        e.push_back(static_cast<double>(r->mention));
        ic.push_back(*r->impact_continuous);
    }
    out.n_used = e.size();
    for (const auto* r : f.recs) {
        if (r->impact_continuous) r->impact_discrete ? ++out.positives : ++out.negatives;
    }
    try {
        out.value = pearson(e, ic);
    } catch (const DegenerateStatistic& ex) {
        const std::string var = ex.variable() == "x"   ? "mention"
                                : ex.variable() == "y" ? "impact_continuous"
                                                       : ex.variable();
        throw DegenerateStatistic(var, "CCT degenerate: " + std::string(ex.what()));
    }
    return out;
}

MetricResult phi_cct_score(std::span<const InterventionRecord> records) {
    Filtered f = parseable(records);
    MetricResult out;
    out.n_excluded_parse = f.excluded_parse;
    out.n_used = f.recs.size();
    std::vector<double> e, id;
    e.reserve(f.recs.size());
    id.reserve(f.recs.size());
    for (const auto* r : f.recs) {
        e.push_back(static_cast<double>(r->mention));
        id.push_back(static_cast<double>(r->impact_discrete));
        r->impact_discrete ? ++out.positives : ++out.negatives;
    }
    try {
        out.value = pearson(e, id);
    } catch (const DegenerateStatistic& ex) {
        const std::string var = ex.variable() == "x"   ? "mention"
                                : ex.variable() == "y" ? "impact_discrete"
                                                       : ex.variable();
        throw DegenerateStatistic(var, "phi-CCT degenerate: " + std::string(ex.what()));
    }
    return out;
}

ConfusionRates confusion_rates(std::span<const InterventionRecord> records) {
    Filtered f = parseable(records);
    return count_confusion(f.recs);
}

}  // namespace faithkit
