#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "faithkit/errors.hpp"
#include "faithkit/gameability.hpp"
#include "faithkit/mock_model.hpp"
#include "faithkit/pipeline.hpp"
#include "faithkit/rng.hpp"

namespace {

using faithkit::RunConfig;

struct PipelineArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool mock = false;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& args) {
    cmd->add_option("--config", args.config_path, "Run configuration file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* seed = cmd->add_option("--seed", "Override the master seed from the config");
    seed->each([&args](const std::string& v) { args.seed = std::stoull(v); });
    cmd->add_flag("--mock", args.mock,
                  "Serve requests from the built-in deterministic mock model");
}

// Loads the config, applies overrides, and (with --mock) points the endpoint
// at a freshly started in-process mock server.
RunConfig prepare_config(const PipelineArgs& args,
                         std::unique_ptr<faithkit::MockServer>& server) {
    RunConfig config = faithkit::load_run_config(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (const char* key = std::getenv("FAITHKIT_API_KEY")) config.endpoint.api_key = key;
    if (args.mock) {
        server = std::make_unique<faithkit::MockServer>(config.mock_seed);
        server->start(0);
        config.endpoint.base_url = server->base_url();
    }
    return config;
}

void print_stage(const faithkit::StageReport& report) {
    if (report.skipped) {
        std::cout << report.stage << ": up to date in " << report.paths.dir.string()
                  << std::endl;
    } else {
        std::cout << report.stage << ": wrote artifacts in " << report.paths.dir.string()
                  << std::endl;
    }
}

nlohmann::ordered_json metric_json(const faithkit::MetricResult& m) {
    nlohmann::ordered_json j;
    j["value"] = m.value;
    if (m.ci_low) j["ci_low"] = *m.ci_low;
    else j["ci_low"] = nullptr;
    if (m.ci_high) j["ci_high"] = *m.ci_high;
    else j["ci_high"] = nullptr;
    j["n_used"] = m.n_used;
    j["positives"] = m.positives;
    j["negatives"] = m.negatives;
    j["degenerate_resamples"] = m.degenerate_resamples;
    j["flags"] = m.flags;
    return j;
}

int run_fauroc(const std::string& config_path, const std::vector<std::string>& run_dirs,
               std::string out_path) {
    const RunConfig config = faithkit::load_run_config(config_path);
    std::vector<faithkit::RunManifest> runs;
    runs.reserve(run_dirs.size());
    for (const auto& dir : run_dirs) runs.push_back(faithkit::load_manifest(dir));

    faithkit::BootstrapSpec spec = config.bootstrap;
    spec.seed = faithkit::derive_seed(config.seed, "fauroc-bootstrap");
    const faithkit::FaurocResult result = faithkit::aggregate_fauroc(runs, spec);

    nlohmann::ordered_json out;
    out["metric"] = "f-auroc";
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& p : result.points) {
        points.push_back({{"label", p.label}, {"fpr", p.fpr}, {"tpr", p.tpr}});
    }
    out["points"] = std::move(points);
    out["f_auroc"] = metric_json(result.metric);

    if (out_path.empty()) out_path = (config.output_root / "fauroc.json").string();
    std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw faithkit::StructuralError("cannot open " + out_path + " for writing");
    file << out.dump(2) << "\n";
    std::cout << "fauroc: " << result.metric.value << " [" << *result.metric.ci_low << ", "
              << *result.metric.ci_high << "] -> " << out_path << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual faithfulness toolkit for LLM self-explanations"};
    app.require_subcommand(1);

    PipelineArgs intervene_args, evaluate_args, metrics_args;
    auto* cmd_intervene = app.add_subcommand(
        "intervene", "Generate, judge, and filter word-insertion interventions");
    add_pipeline_options(cmd_intervene, intervene_args);
    auto* cmd_evaluate = app.add_subcommand(
        "evaluate", "Query the model pre/post intervention and write records");
    add_pipeline_options(cmd_evaluate, evaluate_args);
    auto* cmd_metrics = app.add_subcommand(
        "metrics", "Compute faithfulness metrics with bootstrap intervals");
    add_pipeline_options(cmd_metrics, metrics_args);

    std::string fauroc_config, fauroc_out;
    std::vector<std::string> fauroc_runs;
    auto* cmd_fauroc =
        app.add_subcommand("fauroc", "Aggregate runs differing in length into F-AUROC");
    cmd_fauroc->add_option("--config", fauroc_config, "Run configuration file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_fauroc->add_option("--run", fauroc_runs, "Completed run directory (repeatable)")
        ->required()
        ->expected(-1);
    cmd_fauroc->add_option("--out", fauroc_out,
                           "Output JSON path (default: <output_root>/fauroc.json)");

    std::string plot_kind_name, plot_out;
    std::vector<std::string> plot_runs;
    std::size_t plot_resamples = 200;
    double plot_confidence = 0.95;
    std::uint64_t plot_seed = 0;
    auto* cmd_plot = app.add_subcommand("plot-data", "Export plot-ready CSV tables");
    cmd_plot
        ->add_option("--kind", plot_kind_name,
                     "One of: roc_scatter, phi_contours, impact_histogram, "
                     "accuracy_vs_faithfulness")
        ->required();
    cmd_plot->add_option("--run", plot_runs, "Completed run directory (repeatable)")
        ->required()
        ->expected(-1);
    cmd_plot->add_option("--out", plot_out, "Output CSV path")->required();
    cmd_plot->add_option("--resamples", plot_resamples, "Bootstrap resamples for summaries");
    cmd_plot->add_option("--confidence", plot_confidence, "Bootstrap confidence level");
    cmd_plot->add_option("--seed", plot_seed, "Bootstrap seed for summaries");

    std::string sim_metric = "cct", sim_predictor = "uniform_random",
                sim_explainer = "independent_bernoulli", sim_out;
    double sim_mention_rate = 0.5, sim_tp = 0.9, sim_fp = 0.1;
    double sim_alpha = 0.2, sim_beta = 5.0;
    std::size_t sim_labels = 3;
    std::uint64_t sim_seed = 0;
    std::vector<std::size_t> sim_sizes{1000, 10000, 100000};
    auto* cmd_sim = app.add_subcommand(
        "simulate-gameability", "Probe a metric with simulated predictor/explainer pairs");
    cmd_sim->add_option("--metric", sim_metric, "One of: ct, cct, phi-cct, f-auroc");
    cmd_sim->add_option("--predictor", sim_predictor,
                        "One of: uniform_random, fixed, oracle_like");
    cmd_sim->add_option("--explainer", sim_explainer,
                        "One of: verbatim_repeater, independent_bernoulli, "
                        "mention_if_impactful");
    cmd_sim->add_option("--mention-rate", sim_mention_rate, "independent_bernoulli rate");
    cmd_sim->add_option("--tp-rate", sim_tp, "mention_if_impactful rate on flips");
    cmd_sim->add_option("--fp-rate", sim_fp, "mention_if_impactful rate off flips");
    cmd_sim->add_option("--labels", sim_labels, "Number of predictor classes");
    cmd_sim->add_option("--sizes", sim_sizes, "Sample sizes (comma separated)")
        ->delimiter(',');
    cmd_sim->add_option("--seed", sim_seed, "Simulation seed");
    cmd_sim->add_option("--alpha", sim_alpha, "Impact Beta distribution alpha");
    cmd_sim->add_option("--beta", sim_beta, "Impact Beta distribution beta");
    cmd_sim->add_option("--out", sim_out, "Output JSON path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        std::unique_ptr<faithkit::MockServer> server;
        if (cmd_intervene->parsed()) {
            print_stage(faithkit::run_intervene(prepare_config(intervene_args, server)));
        } else if (cmd_evaluate->parsed()) {
            print_stage(faithkit::run_evaluate(prepare_config(evaluate_args, server)));
        } else if (cmd_metrics->parsed()) {
            const RunConfig config = prepare_config(metrics_args, server);
            print_stage(faithkit::run_metrics(config));
            std::cout << "metrics: " << faithkit::run_paths(config).metrics.string()
                      << std::endl;
        } else if (cmd_fauroc->parsed()) {
            return run_fauroc(fauroc_config, fauroc_runs, fauroc_out);
        } else if (cmd_plot->parsed()) {
            const auto kind = faithkit::plot_kind_from_name(plot_kind_name);
            if (!kind) {
                throw faithkit::StructuralError("unknown plot kind \"" + plot_kind_name +
                                                "\"");
            }
            std::vector<faithkit::RunManifest> runs;
            runs.reserve(plot_runs.size());
            for (const auto& dir : plot_runs) runs.push_back(faithkit::load_manifest(dir));
            faithkit::BootstrapSpec spec;
            spec.resamples = plot_resamples;
            spec.confidence = plot_confidence;
            spec.seed = plot_seed;
            const auto written = faithkit::emit_plot_data(runs, *kind, plot_out, spec);
            for (const auto& path : written) {
                std::cout << "plot-data: " << path.string() << std::endl;
            }
        } else if (cmd_sim->parsed()) {
            faithkit::SimModel model;
            const auto predictor = faithkit::predictor_from_name(sim_predictor);
            if (!predictor) {
                throw faithkit::StructuralError("unknown predictor \"" + sim_predictor + "\"");
            }
            const auto explainer = faithkit::explainer_from_name(sim_explainer);
            if (!explainer) {
                throw faithkit::StructuralError("unknown explainer \"" + sim_explainer + "\"");
            }
            model.predictor = *predictor;
            model.explainer = *explainer;
            model.mention_rate = sim_mention_rate;
            model.tp_rate = sim_tp;
            model.fp_rate = sim_fp;
            model.n_labels = sim_labels;
            model.seed = sim_seed;
            faithkit::BetaSampler impact{sim_alpha, sim_beta};
            const auto report =
                faithkit::estimate_gameability(sim_metric, model, sim_sizes, impact);
            const std::string text = faithkit::serialize_report(report);
            if (sim_out.empty()) {
                std::cout << text << std::endl;
            } else {
                std::ofstream file(sim_out, std::ios::binary | std::ios::trunc);
                if (!file) {
                    throw faithkit::StructuralError("cannot open " + sim_out +
                                                    " for writing");
                }
                file << text << "\n";
                std::cout << "simulate-gameability: " << sim_out << std::endl;
            }
        }
        if (server) server->stop();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
