#include "faithkit/gameability.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "faithkit/distribution.hpp"
#include "faithkit/errors.hpp"
#include "faithkit/metrics.hpp"

namespace faithkit {

namespace {

double sample_normal(SplitMix64& rng) {
    double u1 = rng.uniform01();
    while (u1 <= 0.0) u1 = rng.uniform01();
    const double u2 = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

double sample_gamma(SplitMix64& rng, double shape) {
    if (shape < 1.0) {
        // Johnk boost: G(a) = G(a + 1) * U^(1/a).
        double u = rng.uniform01();
        while (u <= 0.0) u = rng.uniform01();
        return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = sample_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<std::string> synthetic_labels(std::size_t n_labels) {
    std::vector<std::string> labels;
    labels.reserve(n_labels);
    for (std::size_t i = 0; i < n_labels; ++i) labels.push_back("label-" + std::to_string(i));
    return labels;
}

const char* const kInsertedWords[] = {"amber", "briskly", "copper", "dimly", "eagerly",
                                      "faintly", "golden", "hollow", "ivory", "jagged"};

double mention_probability(const SimModel& model, int impact_discrete) {
    switch (model.explainer) {
        case ExplainerKind::verbatim_repeater: return 1.0;
        case ExplainerKind::independent_bernoulli: return model.mention_rate;
        case ExplainerKind::mention_if_impactful:
            return impact_discrete ? model.tp_rate : model.fp_rate;
    }
    throw StructuralError("invalid explainer value");
}

void validate_model(const SimModel& model) {
    if (model.n_labels < 2) throw StructuralError("simulation needs at least two labels");
    for (const double rate : {model.mention_rate, model.tp_rate, model.fp_rate}) {
        if (!(rate >= 0.0) || rate > 1.0) {
            throw StructuralError("explainer rates must lie in [0, 1]");
        }
    }
}

}  // namespace

double sample_beta(SplitMix64& rng, double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw StructuralError("beta sampler needs positive shape parameters");
    }
    for (;;) {
        const double x = sample_gamma(rng, alpha);
        const double y = sample_gamma(rng, beta);
        if (x + y > 0.0) return x / (x + y);
    }
}

std::string_view predictor_name(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::uniform_random: return "uniform_random";
        case PredictorKind::fixed: return "fixed";
        case PredictorKind::oracle_like: return "oracle_like";
    }
    throw StructuralError("invalid predictor value");
}

std::string_view explainer_name(ExplainerKind kind) {
    switch (kind) {
        case ExplainerKind::verbatim_repeater: return "verbatim_repeater";
        case ExplainerKind::independent_bernoulli: return "independent_bernoulli";
        case ExplainerKind::mention_if_impactful: return "mention_if_impactful";
    }
    throw StructuralError("invalid explainer value");
}

std::optional<PredictorKind> predictor_from_name(std::string_view name) {
    if (name == "uniform_random") return PredictorKind::uniform_random;
    if (name == "fixed") return PredictorKind::fixed;
    if (name == "oracle_like") return PredictorKind::oracle_like;
    return std::nullopt;
}

std::optional<ExplainerKind> explainer_from_name(std::string_view name) {
    if (name == "verbatim_repeater") return ExplainerKind::verbatim_repeater;
    if (name == "independent_bernoulli") return ExplainerKind::independent_bernoulli;
    if (name == "mention_if_impactful") return ExplainerKind::mention_if_impactful;
    return std::nullopt;
}

std::vector<InterventionRecord> simulate_records(const SimModel& model, std::size_t n,
                                                 const BetaSampler& impact) {
    if (n == 0) throw StructuralError("simulation needs at least one record");
    validate_model(model);

    const auto labels = synthetic_labels(model.n_labels);
    // Impacts and mentions come from separate streams so that changing the
    // explainer (or sweeping its intensity) never perturbs the impacts.
    SplitMix64 impact_rng(derive_seed(model.seed, "sim-impacts"));
    SplitMix64 mention_rng(derive_seed(model.seed, "sim-mentions"));

    std::vector<InterventionRecord> records;
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        InterventionRecord rec;
        rec.example_id = "sim-" + std::to_string(i);
        const std::string word = kInsertedWords[i % std::size(kInsertedWords)];
        rec.inserted_word = word;
        rec.intervention_id = rec.example_id + ":field:0:" + word;
        rec.parse_ok = true;

        const std::size_t pre_class =
            static_cast<std::size_t>(impact_rng.uniform_index(model.n_labels));
        double continuous = impact(impact_rng);
        const std::size_t other =
            (pre_class + 1 +
             static_cast<std::size_t>(impact_rng.uniform_index(model.n_labels - 1))) %
            model.n_labels;

        switch (model.predictor) {
            case PredictorKind::uniform_random: {
                // Exact ties cannot flip an argmax; nudge them below.
                if (continuous == 0.5) continuous = std::nextafter(0.5, 0.0);
                break;
            }
            case PredictorKind::fixed: {
                continuous = 0.0;
                break;
            }
            case PredictorKind::oracle_like: {
                continuous = continuous > 0.5 ? 1.0 : 0.0;
                break;
            }
        }

        // Move `continuous` mass from the pre class onto one other class:
        // the TVD is then exactly `continuous`, and the argmax flips exactly
        // when it exceeds one half, realizing the threshold rule.
        std::vector<double> pre(model.n_labels, 0.0);
        std::vector<double> post(model.n_labels, 0.0);
        pre[pre_class] = 1.0;
        post[pre_class] = 1.0 - continuous;
        post[other] += continuous;
        rec.pre_dist = ClassDistribution::from_raw(labels, pre);
        rec.post_dist = ClassDistribution::from_raw(labels, post);
        rec.impact_continuous = tvd(*rec.pre_dist, *rec.post_dist);
        rec.impact_discrete = impact_discrete(*rec.pre_dist, *rec.post_dist);

        const double p_mention = mention_probability(model, rec.impact_discrete);
        rec.mention = mention_rng.uniform01() < p_mention ? 1 : 0;
        rec.post_explanation = rec.mention
                                   ? "The word " + word + " settles the label."
                                   : "The overall phrasing points to this label.";
        validate_record(rec);
        records.push_back(std::move(rec));
    }
    return records;
}

SweepResult simulate_fauroc_sweep(const SimModel& model, std::size_t n,
                                  const BetaSampler& impact) {
    // One impact stream shared by all five levels; only the mention draws
    // (and their intensities) vary, mirroring the length-instruction sweep.
    auto records = simulate_records(model, n, impact);
    SweepResult out;
    for (int level = 1; level <= 5; ++level) {
        SimModel leveled = model;
        switch (model.explainer) {
            case ExplainerKind::verbatim_repeater:
                break;  // intensity has nothing to scale
            case ExplainerKind::independent_bernoulli:
                leveled.mention_rate = static_cast<double>(level) / 6.0;
                break;
            case ExplainerKind::mention_if_impactful: {
                const double scale = 0.5 * static_cast<double>(level);
                leveled.tp_rate = std::min(1.0, model.tp_rate * scale);
                leveled.fp_rate = std::min(1.0, model.fp_rate * scale);
                break;
            }
        }

        SplitMix64 mention_rng(
            derive_seed(model.seed, "sweep-mentions:" + std::to_string(level)));
        for (auto& rec : records) {
            const double p = mention_probability(leveled, rec.impact_discrete);
            rec.mention = mention_rng.uniform01() < p ? 1 : 0;
        }

        const ConfusionRates rates = confusion_rates(records);
        out.points.push_back({rates.fpr, rates.tpr, "level-" + std::to_string(level)});
    }
    out.f_auroc = f_auroc(out.points);
    return out;
}

GameabilityReport estimate_gameability(std::string_view metric_name, const SimModel& model,
                                       std::span<const std::size_t> sample_sizes,
                                       const BetaSampler& impact) {
    if (sample_sizes.empty()) {
        throw StructuralError("gameability estimation needs at least one sample size");
    }
    const std::string metric(metric_name);
    if (metric != "ct" && metric != "cct" && metric != "phi-cct" && metric != "f-auroc") {
        throw StructuralError("unknown metric \"" + metric + "\"");
    }

    GameabilityReport report;
    report.metric_name = metric;
    for (const std::size_t n : sample_sizes) {
        report.sample_sizes.push_back(n);
        std::optional<double> estimate;
        try {
            if (metric == "f-auroc") {
                estimate = simulate_fauroc_sweep(model, n, impact).f_auroc;
            } else {
                const auto records = simulate_records(model, n, impact);
                if (metric == "ct") estimate = ct_score(records).value;
                else if (metric == "cct") estimate = cct_score(records).value;
                else estimate = phi_cct_score(records).value;
            }
        } catch (const DegenerateStatistic&) {
            // Too few records for the metric at this n: leave the slot empty.
        }
        report.estimates_by_n.push_back(estimate);
        if (estimate) report.alpha_estimate = estimate;
    }
    return report;
}

std::string serialize_report(const GameabilityReport& report) {
    nlohmann::ordered_json j;
    j["metric_name"] = report.metric_name;
    if (report.alpha_estimate) j["alpha_estimate"] = *report.alpha_estimate;
    else j["alpha_estimate"] = nullptr;
    j["sample_sizes"] = report.sample_sizes;
    nlohmann::ordered_json estimates = nlohmann::ordered_json::array();
    for (const auto& e : report.estimates_by_n) {
        if (e) estimates.push_back(*e);
        else estimates.push_back(nullptr);
    }
    j["estimates_by_n"] = std::move(estimates);
    return j.dump(2);
}

}  // namespace faithkit
