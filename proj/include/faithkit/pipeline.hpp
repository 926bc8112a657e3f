#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faithkit/client.hpp"
#include "faithkit/prompt.hpp"
#include "faithkit/records.hpp"
#include "faithkit/resampling.hpp"
#include "faithkit/roc.hpp"

namespace faithkit {

struct DatasetConfig {
    std::string id;
    std::filesystem::path path;
    std::size_t examples = 0;  // 0 keeps every test example
};

struct InterventionConfig {
    std::size_t total = 0;  // candidates generated before the naturalness filter
    double filter_fraction = 0.05;
    std::filesystem::path lexicon;
    std::string tagger = "lexicon";  // "lexicon" or "pretagged"
    std::optional<std::filesystem::path> tagged_corpus;
};

struct RunConfig {
    DatasetConfig dataset;
    ClientConfig endpoint;  // api_key comes from the environment, never the file
    std::uint64_t mock_seed = 7;
    PromptSpec prompt;  // shot_seed is derived from `seed`, not configured
    InterventionConfig interventions;
    BootstrapSpec bootstrap;  // seed is derived from `seed`, not configured
    std::filesystem::path output_root = "out";
    std::uint64_t seed = 0;
};

// Parses the documented JSON schema; relative paths resolve against base_dir.
RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
void validate_run_config(const RunConfig& config);

// 16-hex digest over the semantic fields only. Endpoint location, retry
// policy, concurrency, cache and output paths never change the science, so
// they never change the run identity.
std::string run_config_hash(const RunConfig& config);

struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path examples;
    std::filesystem::path interventions;
    std::filesystem::path intervene_summary;
    std::filesystem::path responses;
    std::filesystem::path predictions;
    std::filesystem::path records;
    std::filesystem::path metrics;
    std::filesystem::path manifest;
    std::filesystem::path lock;
};

RunPaths run_paths(const RunConfig& config);

// Persisted record schema (one JSON object per line; see README).
std::string serialize_record(const InterventionRecord& rec);
InterventionRecord parse_record(const std::string& line);
std::vector<InterventionRecord> load_records(const std::filesystem::path& records_path);

struct StageReport {
    std::string stage;
    bool skipped = false;  // every artifact of the stage was already present
    RunPaths paths;
};

// The three stages behind the CLI verbs. Each is a no-op when its artifacts
// (or the completed-run manifest) already exist; `run_metrics` finishes the
// run by writing the manifest.
StageReport run_intervene(const RunConfig& config);
StageReport run_evaluate(const RunConfig& config);
StageReport run_metrics(const RunConfig& config);

struct RunManifest {
    std::string run_id;
    std::filesystem::path dir;
    std::string dataset_id;
    std::string model;
    PromptSpec prompt;
    std::uint64_t seed = 0;
    std::map<std::string, std::size_t> counts;
    RunPaths paths;
};

// Runs all three stages and returns the completed manifest.
RunManifest run_pipeline(const RunConfig& config);

RunManifest load_manifest(const std::filesystem::path& run_dir);

struct FaurocResult {
    MetricResult metric;          // value + clustered bootstrap CI
    std::vector<RocPoint> points;  // one confusion point per contributing run
};

// Joint clustered bootstrap across runs that differ only in the length
// instruction: every resample draws one set of example clusters shared by
// all runs, rebuilds each run's confusion point, and takes the hull area.
FaurocResult aggregate_fauroc(std::span<const RunManifest> runs, const BootstrapSpec& spec);

enum class PlotKind { roc_scatter, phi_contours, impact_histogram, accuracy_vs_faithfulness };

std::string_view plot_kind_name(PlotKind kind);
std::optional<PlotKind> plot_kind_from_name(std::string_view name);

// Writes the CSV(s) for one figure kind and returns the paths written.
// accuracy_vs_faithfulness adds a "<stem>_summary.csv" with the Spearman
// rank correlation and its run-resampling CI.
std::vector<std::filesystem::path> emit_plot_data(std::span<const RunManifest> runs,
                                                  PlotKind kind,
                                                  const std::filesystem::path& out_path,
                                                  const BootstrapSpec& spec);

}  // namespace faithkit
