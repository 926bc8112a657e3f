#include "faithkit/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "faithkit/cache.hpp"
#include "faithkit/dataset.hpp"
#include "faithkit/distribution.hpp"
#include "faithkit/errors.hpp"
#include "faithkit/interventions.hpp"
#include "faithkit/lexicon.hpp"
#include "faithkit/metrics.hpp"
#include "faithkit/rng.hpp"
#include "faithkit/textutil.hpp"

namespace faithkit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------- utilities

[[noreturn]] void config_error(const std::string& message) {
    throw StructuralError("config: " + message);
}

const ordered_json& expect_object(const ordered_json& j, const std::string& name) {
    if (!j.is_object()) config_error("\"" + name + "\" must be an object");
    return j;
}

void reject_unknown_keys(const ordered_json& j, const std::string& name,
                         std::initializer_list<std::string_view> known) {
    for (const auto& item : j.items()) {
        bool found = false;
        for (const auto& k : known) {
            if (item.key() == k) {
                found = true;
                break;
            }
        }
        if (!found) config_error("unknown field \"" + item.key() + "\" in \"" + name + "\"");
    }
}

template <typename T>
T get_field(const ordered_json& j, const std::string& scope, const std::string& key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        config_error("field \"" + scope + "." + key + "\" has the wrong type");
    }
}

template <typename T>
T require_field(const ordered_json& j, const std::string& scope, const std::string& key) {
    if (!j.contains(key) || j[key].is_null()) {
        config_error("missing required field \"" + scope + "." + key + "\"");
    }
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        config_error("field \"" + scope + "." + key + "\" has the wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

// Shortest round-trip rendering, shared by the CSV emitters.
std::string fmt_double(double v) { return json(v).dump(); }

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StructuralError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw StructuralError("failed while writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StructuralError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> read_jsonl_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StructuralError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

// One pipeline run per run directory: the lock is an O_EXCL marker file.
class RunLock {
  public:
    explicit RunLock(std::filesystem::path path) : path_(std::move(path)) {
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            if (errno == EEXIST) {
                throw StructuralError("run directory is locked: " + path_.string() +
                                      " exists; remove it if no other process is running");
            }
            throw StructuralError("cannot create lock file " + path_.string());
        }
        ::close(fd);
    }
    ~RunLock() { ::unlink(path_.c_str()); }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

  private:
    std::filesystem::path path_;
};

// ------------------------------------------------------------ config schema

ordered_json prompt_echo(const PromptSpec& spec) {
    ordered_json j;
    j["regime"] = std::string(regime_name(spec.regime));
    j["order"] = std::string(order_name(spec.order));
    if (spec.length) j["length"] = *spec.length;
    else j["length"] = nullptr;
    j["shots"] = spec.shots;
    return j;
}

PromptSpec prompt_from_echo(const ordered_json& j, const std::string& scope) {
    PromptSpec spec;
    const std::string regime = get_field<std::string>(j, scope, "regime", "it-exp");
    const auto parsed_regime = regime_from_name(regime);
    if (!parsed_regime) config_error("unknown regime \"" + regime + "\"");
    spec.regime = *parsed_regime;
    const std::string order = get_field<std::string>(j, scope, "order", "ep");
    const auto parsed_order = order_from_name(order);
    if (!parsed_order) config_error("unknown answer order \"" + order + "\"");
    spec.order = *parsed_order;
    if (j.contains("length") && !j["length"].is_null()) {
        spec.length = require_field<std::string>(j, scope, "length");
    }
    spec.shots = get_field<std::size_t>(j, scope, "shots", 10);
    return spec;
}

ordered_json semantic_config(const RunConfig& config) {
    ordered_json j;
    ordered_json dataset;
    dataset["id"] = config.dataset.id;
    dataset["path"] = config.dataset.path.generic_string();
    dataset["examples"] = config.dataset.examples;
    j["dataset"] = std::move(dataset);
    j["model"] = config.endpoint.model;
    j["mock_seed"] = config.mock_seed;
    j["prompt"] = prompt_echo(config.prompt);
    ordered_json iv;
    iv["total"] = config.interventions.total;
    iv["filter_fraction"] = config.interventions.filter_fraction;
    iv["lexicon"] = config.interventions.lexicon.generic_string();
    iv["tagger"] = config.interventions.tagger;
    if (config.interventions.tagged_corpus) {
        iv["tagged_corpus"] = config.interventions.tagged_corpus->generic_string();
    } else {
        iv["tagged_corpus"] = nullptr;
    }
    j["interventions"] = std::move(iv);
    ordered_json bs;
    bs["resamples"] = config.bootstrap.resamples;
    bs["confidence"] = config.bootstrap.confidence;
    j["bootstrap"] = std::move(bs);
    j["seed"] = config.seed;
    return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const json::parse_error& e) {
        config_error(std::string("not valid JSON: ") + e.what());
    }
    expect_object(j, "config");
    reject_unknown_keys(j, "config",
                        {"dataset", "endpoint", "prompt", "interventions", "bootstrap",
                         "output_root", "seed"});

    RunConfig config;

    if (!j.contains("dataset")) config_error("missing required field \"dataset\"");
    const auto& ds = expect_object(j["dataset"], "dataset");
    reject_unknown_keys(ds, "dataset", {"id", "path", "examples"});
    config.dataset.id = require_field<std::string>(ds, "dataset", "id");
    config.dataset.path =
        resolve(base_dir, require_field<std::string>(ds, "dataset", "path"));
    config.dataset.examples = get_field<std::size_t>(ds, "dataset", "examples", 0);

    if (j.contains("endpoint")) {
        const auto& ep = expect_object(j["endpoint"], "endpoint");
        reject_unknown_keys(ep, "endpoint",
                            {"base_url", "model", "max_attempts", "backoff_initial_ms",
                             "concurrency", "cache_dir", "mock_seed"});
        config.endpoint.base_url =
            get_field<std::string>(ep, "endpoint", "base_url", config.endpoint.base_url);
        config.endpoint.model =
            get_field<std::string>(ep, "endpoint", "model", config.endpoint.model);
        config.endpoint.max_attempts = get_field<std::size_t>(ep, "endpoint", "max_attempts",
                                                              config.endpoint.max_attempts);
        config.endpoint.backoff_initial_ms = get_field<unsigned>(
            ep, "endpoint", "backoff_initial_ms", config.endpoint.backoff_initial_ms);
        config.endpoint.concurrency =
            get_field<std::size_t>(ep, "endpoint", "concurrency", config.endpoint.concurrency);
        const std::string cache = get_field<std::string>(ep, "endpoint", "cache_dir", "");
        if (!cache.empty()) config.endpoint.cache_dir = resolve(base_dir, cache);
        config.mock_seed = get_field<std::uint64_t>(ep, "endpoint", "mock_seed", 7);
    }

    if (j.contains("prompt")) {
        const auto& pr = expect_object(j["prompt"], "prompt");
        reject_unknown_keys(pr, "prompt", {"regime", "order", "length", "shots"});
        config.prompt = prompt_from_echo(pr, "prompt");
    }

    if (!j.contains("interventions")) config_error("missing required field \"interventions\"");
    const auto& iv = expect_object(j["interventions"], "interventions");
    reject_unknown_keys(iv, "interventions",
                        {"total", "filter_fraction", "lexicon", "tagger", "tagged_corpus"});
    config.interventions.total = require_field<std::size_t>(iv, "interventions", "total");
    config.interventions.filter_fraction =
        get_field<double>(iv, "interventions", "filter_fraction", 0.05);
    config.interventions.lexicon =
        resolve(base_dir, require_field<std::string>(iv, "interventions", "lexicon"));
    config.interventions.tagger =
        get_field<std::string>(iv, "interventions", "tagger", "lexicon");
    const std::string corpus = get_field<std::string>(iv, "interventions", "tagged_corpus", "");
    if (!corpus.empty()) config.interventions.tagged_corpus = resolve(base_dir, corpus);

    if (j.contains("bootstrap")) {
        const auto& bs = expect_object(j["bootstrap"], "bootstrap");
        reject_unknown_keys(bs, "bootstrap", {"resamples", "confidence"});
        config.bootstrap.resamples =
            get_field<std::size_t>(bs, "bootstrap", "resamples", config.bootstrap.resamples);
        config.bootstrap.confidence =
            get_field<double>(bs, "bootstrap", "confidence", config.bootstrap.confidence);
    }

    config.output_root =
        resolve(base_dir, get_field<std::string>(j, "config", "output_root", "out"));
    config.seed = get_field<std::uint64_t>(j, "config", "seed", 0);

    validate_run_config(config);
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_file(path), path.parent_path());
}

void validate_run_config(const RunConfig& config) {
    dataset_info(config.dataset.id);  // throws on unknown ids
    if (config.dataset.path.empty()) config_error("dataset path is empty");
    validate_prompt_spec(config.prompt);
    if (config.interventions.total == 0) config_error("interventions.total must be positive");
    if (!(config.interventions.filter_fraction > 0.0) ||
        config.interventions.filter_fraction > 1.0) {
        config_error("interventions.filter_fraction must lie in (0, 1]");
    }
    if (config.interventions.lexicon.empty()) config_error("interventions.lexicon is empty");
    if (config.interventions.tagger != "lexicon" && config.interventions.tagger != "pretagged") {
        config_error("interventions.tagger must be \"lexicon\" or \"pretagged\"");
    }
    if (config.interventions.tagger == "pretagged" && !config.interventions.tagged_corpus) {
        config_error("the pretagged tagger needs interventions.tagged_corpus");
    }
    if (config.bootstrap.resamples == 0) config_error("bootstrap.resamples must be positive");
    if (config.bootstrap.confidence <= 0.0 || config.bootstrap.confidence >= 1.0) {
        config_error("bootstrap.confidence must lie in (0, 1)");
    }
    if (config.endpoint.max_attempts == 0) config_error("endpoint.max_attempts must be positive");
    if (config.endpoint.concurrency == 0) config_error("endpoint.concurrency must be positive");
    if (config.output_root.empty()) config_error("output_root is empty");
}

std::string run_config_hash(const RunConfig& config) {
    return sha256_hex(semantic_config(config).dump()).substr(0, 16);
}

RunPaths run_paths(const RunConfig& config) {
    RunPaths paths;
    paths.dir = config.output_root / "runs" / run_config_hash(config);
    paths.examples = paths.dir / "examples.jsonl";
    paths.interventions = paths.dir / "interventions.jsonl";
    paths.intervene_summary = paths.dir / "intervene_summary.json";
    paths.responses = paths.dir / "responses.jsonl";
    paths.predictions = paths.dir / "predictions.jsonl";
    paths.records = paths.dir / "records.jsonl";
    paths.metrics = paths.dir / "metrics.json";
    paths.manifest = paths.dir / "manifest.json";
    paths.lock = paths.dir / ".lock";
    return paths;
}

// ------------------------------------------------------ record persistence

namespace {

ordered_json dist_to_json(const std::optional<ClassDistribution>& dist) {
    if (!dist) return nullptr;
    ordered_json j;
    j["labels"] = dist->labels;
    j["probs"] = dist->probs;
    return j;
}

std::optional<ClassDistribution> dist_from_json(const json& j, const std::string& context) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_object() || !j.contains("labels") || !j.contains("probs")) {
        throw StructuralError(context + ": distribution needs labels and probs");
    }
    ClassDistribution dist;
    dist.labels = j["labels"].get<std::vector<std::string>>();
    dist.probs = j["probs"].get<std::vector<double>>();
    if (dist.labels.size() != dist.probs.size() || dist.labels.empty()) {
        throw StructuralError(context + ": labels and probs must be parallel and nonempty");
    }
    // Stored probabilities are already normalized; reconstruct verbatim so a
    // round trip is bit-exact instead of renormalizing drift in.
    dist.raw_probs = dist.probs;
    return dist;
}

}  // namespace

std::string serialize_record(const InterventionRecord& rec) {
    ordered_json j;
    j["example_id"] = rec.example_id;
    j["intervention_id"] = rec.intervention_id;
    j["inserted_word"] = rec.inserted_word;
    j["pre_dist"] = dist_to_json(rec.pre_dist);
    j["post_dist"] = dist_to_json(rec.post_dist);
    if (rec.impact_continuous) j["impact_continuous"] = *rec.impact_continuous;
    else j["impact_continuous"] = nullptr;
    j["impact_discrete"] = rec.impact_discrete;
    j["mention"] = rec.mention;
    j["post_explanation"] = rec.post_explanation;
    j["parse_ok"] = rec.parse_ok;
    return j.dump();
}

InterventionRecord parse_record(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw StructuralError(std::string("record line is not valid JSON: ") + e.what());
    }
    InterventionRecord rec;
    try {
        rec.example_id = j.at("example_id").get<std::string>();
        rec.intervention_id = j.at("intervention_id").get<std::string>();
        rec.inserted_word = j.at("inserted_word").get<std::string>();
        rec.pre_dist = dist_from_json(j.at("pre_dist"), rec.intervention_id);
        rec.post_dist = dist_from_json(j.at("post_dist"), rec.intervention_id);
        if (!j.at("impact_continuous").is_null()) {
            rec.impact_continuous = j.at("impact_continuous").get<double>();
        }
        rec.impact_discrete = j.at("impact_discrete").get<int>();
        rec.mention = j.at("mention").get<int>();
        rec.post_explanation = j.at("post_explanation").get<std::string>();
        rec.parse_ok = j.at("parse_ok").get<bool>();
    } catch (const json::exception& e) {
        throw StructuralError("record line misses a field: " + std::string(e.what()));
    }
    validate_record(rec);
    return rec;
}

std::vector<InterventionRecord> load_records(const std::filesystem::path& records_path) {
    std::vector<InterventionRecord> records;
    for (const auto& line : read_jsonl_lines(records_path)) {
        records.push_back(parse_record(line));
    }
    return records;
}

// ------------------------------------------------------------- model calls

namespace {

struct CallResult {
    std::optional<Completion> completion;
    std::string error;  // nonempty iff the call failed
};

// Bounded worker pool that records per-item failures instead of aborting:
// partial failures become per-record facts, not run failures.
std::vector<CallResult> complete_all(ModelClient& client,
                                     const std::vector<ModelRequest>& requests) {
    std::vector<CallResult> results(requests.size());
    if (requests.empty()) return results;

    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) break;
            try {
                results[i].completion = client.complete(requests[i]);
            } catch (const TransportError& e) {
                results[i].error = e.what();
            } catch (const StructuralError& e) {
                results[i].error = e.what();
            } catch (...) {
                std::lock_guard<std::mutex> lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
                break;
            }
        }
    };

    const std::size_t n_threads = std::min(client.config().concurrency, requests.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();

    if (fatal) std::rethrow_exception(fatal);
    return results;
}

bool all_exist(std::initializer_list<std::filesystem::path> paths) {
    for (const auto& p : paths) {
        if (!std::filesystem::exists(p)) return false;
    }
    return true;
}

std::vector<const Example*> pick_example_subset(const std::vector<Example>& test,
                                                std::size_t wanted, std::uint64_t seed) {
    std::vector<const Example*> subset;
    if (wanted == 0 || wanted >= test.size()) {
        for (const auto& ex : test) subset.push_back(&ex);
        return subset;
    }
    std::vector<std::size_t> indices(test.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    SplitMix64 rng(derive_seed(seed, "example-sampling"));
    for (std::size_t i = 0; i < wanted; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(rng.uniform_index(indices.size() - i));
        std::swap(indices[i], indices[j]);
    }
    indices.resize(wanted);
    std::sort(indices.begin(), indices.end());  // keep dataset file order
    for (const std::size_t i : indices) subset.push_back(&test[i]);
    return subset;
}

PromptSpec effective_prompt(const RunConfig& config) {
    PromptSpec spec = config.prompt;
    spec.shot_seed = derive_seed(config.seed, "shots");
    return spec;
}

std::string intervention_to_json(const Intervention& iv,
                                 const std::vector<std::string>& flags) {
    ordered_json j;
    j["intervention_id"] = iv.intervention_id;
    j["example_id"] = iv.example_id;
    j["field_name"] = iv.field_name;
    j["token_index"] = iv.token_index;
    j["inserted_word"] = iv.inserted_word;
    j["modified_text"] = iv.modified_text;
    if (iv.naturalness) j["naturalness"] = *iv.naturalness;
    else j["naturalness"] = nullptr;
    j["flags"] = flags;
    return j.dump();
}

Intervention intervention_from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw StructuralError(std::string("intervention line is not valid JSON: ") + e.what());
    }
    Intervention iv;
    try {
        iv.intervention_id = j.at("intervention_id").get<std::string>();
        iv.example_id = j.at("example_id").get<std::string>();
        iv.field_name = j.at("field_name").get<std::string>();
        iv.token_index = j.at("token_index").get<std::size_t>();
        iv.inserted_word = j.at("inserted_word").get<std::string>();
        iv.modified_text = j.at("modified_text").get<std::string>();
        if (!j.at("naturalness").is_null()) iv.naturalness = j.at("naturalness").get<double>();
    } catch (const json::exception& e) {
        throw StructuralError("intervention line misses a field: " + std::string(e.what()));
    }
    return iv;
}

}  // namespace

// ----------------------------------------------------------- stage: intervene

StageReport run_intervene(const RunConfig& config) {
    validate_run_config(config);
    StageReport report{"intervene", false, run_paths(config)};
    const RunPaths& paths = report.paths;
    if (std::filesystem::exists(paths.manifest) ||
        all_exist({paths.examples, paths.interventions, paths.intervene_summary})) {
        report.skipped = true;
        return report;
    }

    // Config and input validation happen before any network call.
    const DatasetInfo& info = dataset_info(config.dataset.id);
    const LoadedDataset data = load_dataset(config.dataset.path, config.dataset.id);
    const auto lexicon = load_lexicon(config.interventions.lexicon);
    std::unique_ptr<PosTagger> tagger;
    if (config.interventions.tagger == "pretagged") {
        tagger = std::make_unique<PretaggedTagger>(*config.interventions.tagged_corpus);
    } else {
        tagger = std::make_unique<LexiconTagger>(lexicon);
    }
    if (data.test.empty()) {
        throw StructuralError("dataset has no test examples: " + config.dataset.path.string());
    }

    std::filesystem::create_directories(paths.dir);
    RunLock lock(paths.lock);

    const auto subset =
        pick_example_subset(data.test, config.dataset.examples, config.seed);
    std::vector<Example> chosen;
    chosen.reserve(subset.size());
    for (const auto* ex : subset) chosen.push_back(*ex);

    const auto allocation =
        allocate_interventions(chosen, config.interventions.total, config.seed);

    std::vector<Intervention> candidates;
    std::map<std::string, std::size_t> generation_flags;
    std::unordered_map<std::string, const Example*> example_by_id;
    for (const auto& ex : chosen) {
        example_by_id[ex.example_id] = &ex;
        const std::size_t count = allocation.at(ex.example_id);
        auto generated =
            generate_insertions(ex, info, lexicon, *tagger, count, config.seed);
        for (const auto& flag : generated.flags) ++generation_flags[flag];
        for (auto& iv : generated.interventions) candidates.push_back(std::move(iv));
    }

    // Naturalness judging: greedy logprob pass first, sampled votes when the
    // endpoint exposes no token information.
    ModelClient client(config.endpoint);
    std::vector<ModelRequest> judge_requests;
    judge_requests.reserve(candidates.size());
    for (const auto& iv : candidates) {
        const Example* ex = example_by_id.at(iv.example_id);
        ModelRequest req;
        req.prompt = naturalness_prompt(ex->field(iv.field_name), iv.modified_text);
        req.temperature = 0.0;
        req.max_tokens = 16;
        req.logprobs = true;
        judge_requests.push_back(std::move(req));
    }
    const auto judged = complete_all(client, judge_requests);

    std::vector<Intervention> scored;
    std::vector<std::vector<std::string>> scored_flags;
    std::map<std::string, std::size_t> naturalness_flags;
    std::size_t failed_calls = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        Intervention iv = candidates[i];
        std::vector<std::string> flags;
        if (!judged[i].completion) {
            ++failed_calls;
            ++naturalness_flags["judge_transport_failed"];
            continue;  // unscored candidates cannot enter the filter
        }
        if (auto score = naturalness_from_completion(*judged[i].completion)) {
            iv.naturalness = score->value;
            flags = score->flags;
        } else {
            // Fallback: yes/no votes sampled at temperature 1.
            const std::uint64_t vote_base =
                derive_seed(derive_seed(config.seed, "naturalness-votes"), iv.intervention_id);
            std::size_t yes = 0, votes = 0;
            for (std::size_t k = 0; k < 8; ++k) {
                ModelRequest vote = judge_requests[i];
                vote.temperature = 1.0;
                vote.logprobs = false;
                vote.seed = derive_seed(vote_base, static_cast<std::uint64_t>(k));
                try {
                    const Completion c = client.complete(vote);
                    const std::string_view text = trim(c.text);
                    if (text.size() >= 3 && ascii_lower(text.substr(0, 3)) == "yes") ++yes;
                    ++votes;
                } catch (const TransportError&) {
                } catch (const StructuralError&) {
                }
            }
            if (votes == 0) {
                ++failed_calls;
                ++naturalness_flags["judge_transport_failed"];
                continue;
            }
            iv.naturalness = static_cast<double>(yes) / static_cast<double>(votes);
            flags.push_back("approximate");
        }
        for (const auto& flag : flags) ++naturalness_flags[flag];
        scored.push_back(std::move(iv));
        scored_flags.push_back(std::move(flags));
    }

    if (scored.empty()) {
        throw StructuralError("no intervention candidate survived naturalness judging");
    }
    auto selected = select_top_fraction(scored, config.interventions.filter_fraction);

    std::string iv_lines;
    for (const auto& iv : selected) {
        // Flags were recorded per scored candidate; find them by id.
        std::vector<std::string> flags;
        for (std::size_t i = 0; i < scored.size(); ++i) {
            if (scored[i].intervention_id == iv.intervention_id) {
                flags = scored_flags[i];
                break;
            }
        }
        iv_lines += intervention_to_json(iv, flags) + "\n";
    }
    std::string example_lines;
    for (const auto& ex : chosen) example_lines += serialize_example(ex) + "\n";

    ordered_json summary;
    summary["counts"] = {{"examples", chosen.size()},
                         {"candidates", candidates.size()},
                         {"scored", scored.size()},
                         {"selected", selected.size()},
                         {"naturalness_failed", failed_calls}};
    summary["generation_flags"] = generation_flags;
    summary["naturalness_flags"] = naturalness_flags;

    atomic_write(paths.examples, example_lines);
    atomic_write(paths.interventions, iv_lines);
    atomic_write(paths.intervene_summary, summary.dump(2) + "\n");
    return report;
}

// ----------------------------------------------------------- stage: evaluate

namespace {

struct PhaseOutcome {
    ParsedResponse parsed;
    std::optional<ClassDistribution> dist;
    std::string text;
    std::vector<std::string> flags;
    bool transport_ok = false;
};

PhaseOutcome parse_phase(const DatasetInfo& info, const PromptSpec& spec,
                         const CallResult& call) {
    PhaseOutcome out;
    if (!call.completion) {
        out.flags.push_back("transport_failed");
        return out;
    }
    out.transport_ok = true;
    out.text = call.completion->text;
    out.flags = call.completion->flags;
    out.parsed = parse_response(info, spec, call.completion->text);
    try {
        out.dist = extract_class_distribution(info, spec, *call.completion);
    } catch (const DistributionUnavailable&) {
        out.flags.push_back("distribution_unavailable");
    }
    return out;
}

ordered_json response_row(std::string_view phase, const std::string& id,
                          const CallResult& call) {
    ordered_json j;
    j["phase"] = std::string(phase);
    j["id"] = id;
    j["ok"] = call.completion.has_value();
    j["text"] = call.completion ? call.completion->text : "";
    if (call.error.empty()) j["error"] = nullptr;
    else j["error"] = call.error;
    return j;
}

}  // namespace

StageReport run_evaluate(const RunConfig& config) {
    validate_run_config(config);
    StageReport report{"evaluate", false, run_paths(config)};
    const RunPaths& paths = report.paths;
    if (std::filesystem::exists(paths.manifest) ||
        all_exist({paths.records, paths.predictions, paths.responses})) {
        report.skipped = true;
        return report;
    }
    for (const auto& needed : {paths.examples, paths.interventions}) {
        if (!std::filesystem::exists(needed)) {
            throw StructuralError("evaluate needs " + needed.string() +
                                  "; run the intervene stage first");
        }
    }

    const DatasetInfo& info = dataset_info(config.dataset.id);
    const LoadedDataset data = load_dataset(config.dataset.path, config.dataset.id);
    const LoadedDataset chosen = load_dataset(paths.examples, config.dataset.id);
    const std::vector<Example>& subset = chosen.test;

    std::vector<Intervention> interventions;
    for (const auto& line : read_jsonl_lines(paths.interventions)) {
        interventions.push_back(intervention_from_json(line));
    }

    RunLock lock(paths.lock);
    const PromptSpec spec = effective_prompt(config);

    std::unordered_map<std::string, const Example*> example_by_id;
    for (const auto& ex : subset) example_by_id[ex.example_id] = &ex;

    // Pre- and post-intervention phases share shots via the query id, so the
    // prompts differ only inside the intervened field.
    ModelClient client(config.endpoint);
    std::vector<ModelRequest> requests;
    requests.reserve(subset.size() + interventions.size());
    for (const auto& ex : subset) {
        const auto shots = sample_fewshot(data.train, spec, ex.example_id);
        requests.push_back({build_prompt(info, spec, shots, ex)});
    }
    for (const auto& iv : interventions) {
        const auto it = example_by_id.find(iv.example_id);
        if (it == example_by_id.end()) {
            throw StructuralError("intervention " + iv.intervention_id +
                                  " names unknown example " + iv.example_id);
        }
        Example modified = *it->second;
        bool replaced = false;
        for (auto& [name, text] : modified.fields) {
            if (name == iv.field_name) {
                text = iv.modified_text;
                replaced = true;
                break;
            }
        }
        if (!replaced) {
            throw StructuralError("intervention " + iv.intervention_id +
                                  " names unknown field " + iv.field_name);
        }
        const auto shots = sample_fewshot(data.train, spec, iv.example_id);
        requests.push_back({build_prompt(info, spec, shots, modified)});
    }

    const auto calls = complete_all(client, requests);

    std::string response_lines;
    std::string prediction_lines;
    std::unordered_map<std::string, const PhaseOutcome*> pre_by_example;
    std::vector<PhaseOutcome> pre_outcomes(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
        const Example& ex = subset[i];
        pre_outcomes[i] = parse_phase(info, spec, calls[i]);
        const PhaseOutcome& pre = pre_outcomes[i];
        pre_by_example[ex.example_id] = &pre_outcomes[i];
        response_lines += response_row("pre", ex.example_id, calls[i]).dump() + "\n";

        ordered_json row;
        row["example_id"] = ex.example_id;
        row["gold_label"] = ex.gold_label;
        if (pre.parsed.label) row["predicted_label"] = *pre.parsed.label;
        else row["predicted_label"] = nullptr;
        const bool ok = pre.transport_ok && pre.parsed.parse_ok;
        row["parse_ok"] = ok;
        // Task accuracy: anything unparseable counts as incorrect.
        row["correct"] = ok && *pre.parsed.label == ex.gold_label;
        std::vector<std::string> flags = pre.flags;
        flags.insert(flags.end(), pre.parsed.flags.begin(), pre.parsed.flags.end());
        row["flags"] = flags;
        prediction_lines += row.dump() + "\n";
    }

    std::string record_lines;
    for (std::size_t k = 0; k < interventions.size(); ++k) {
        const Intervention& iv = interventions[k];
        const CallResult& call = calls[subset.size() + k];
        const PhaseOutcome post = parse_phase(info, spec, call);
        const PhaseOutcome& pre = *pre_by_example.at(iv.example_id);
        response_lines += response_row("post", iv.intervention_id, call).dump() + "\n";

        InterventionRecord rec;
        rec.example_id = iv.example_id;
        rec.intervention_id = iv.intervention_id;
        rec.inserted_word = iv.inserted_word;
        rec.parse_ok = pre.transport_ok && pre.parsed.parse_ok && post.transport_ok &&
                       post.parsed.parse_ok;
        rec.pre_dist = pre.dist;
        rec.post_dist = post.dist;
        if (pre.dist && post.dist) {
            rec.impact_continuous = tvd(*pre.dist, *post.dist);
            rec.impact_discrete = impact_discrete(*pre.dist, *post.dist);
        } else if (rec.parse_ok) {
            rec.impact_discrete = *pre.parsed.label != *post.parsed.label ? 1 : 0;
        }
        rec.post_explanation = post.parsed.explanation;
        rec.mention = rec.parse_ok ? detect_mention(iv.inserted_word, rec.post_explanation) : 0;
        validate_record(rec);
        record_lines += serialize_record(rec) + "\n";
    }

    atomic_write(paths.responses, response_lines);
    atomic_write(paths.predictions, prediction_lines);
    atomic_write(paths.records, record_lines);
    return report;
}

// ------------------------------------------------------------ stage: metrics

namespace {

// Statistics for the clustered bootstrap delegate to the canonical scorers,
// so every reported value is recomputable from the records alone.
std::vector<InterventionRecord> materialize(const RecordRefs& refs) {
    std::vector<InterventionRecord> recs;
    recs.reserve(refs.size());
    for (const auto* r : refs) recs.push_back(*r);
    return recs;
}

ordered_json metric_to_json(const MetricResult& m) {
    ordered_json j;
    j["value"] = m.value;
    if (m.ci_low) j["ci_low"] = *m.ci_low;
    else j["ci_low"] = nullptr;
    if (m.ci_high) j["ci_high"] = *m.ci_high;
    else j["ci_high"] = nullptr;
    j["n_used"] = m.n_used;
    j["n_excluded_parse"] = m.n_excluded_parse;
    j["n_missing_distribution"] = m.n_missing_distribution;
    j["positives"] = m.positives;
    j["negatives"] = m.negatives;
    j["degenerate_resamples"] = m.degenerate_resamples;
    j["flags"] = m.flags;
    return j;
}

ordered_json guarded_metric(const std::function<MetricResult()>& compute) {
    try {
        return metric_to_json(compute());
    } catch (const DegenerateStatistic& e) {
        ordered_json j;
        j["unavailable"] = std::string(e.what());
        return j;
    }
}

MetricResult with_ci(MetricResult base, std::span<const InterventionRecord> records,
                     const Statistic& stat, const BootstrapSpec& spec) {
    const MetricResult ci = clustered_bootstrap_ci(records, stat, spec);
    base.value = ci.value;
    base.ci_low = ci.ci_low;
    base.ci_high = ci.ci_high;
    base.degenerate_resamples = ci.degenerate_resamples;
    for (const auto& flag : ci.flags) base.flags.push_back(flag);
    return base;
}

}  // namespace

StageReport run_metrics(const RunConfig& config) {
    validate_run_config(config);
    StageReport report{"metrics", false, run_paths(config)};
    const RunPaths& paths = report.paths;
    if (all_exist({paths.metrics, paths.manifest})) {
        report.skipped = true;
        return report;
    }
    for (const auto& needed : {paths.records, paths.predictions, paths.intervene_summary}) {
        if (!std::filesystem::exists(needed)) {
            throw StructuralError("metrics needs " + needed.string() +
                                  "; run the earlier stages first");
        }
    }

    RunLock lock(paths.lock);
    const auto records = load_records(paths.records);

    std::size_t prediction_total = 0, prediction_correct = 0;
    for (const auto& line : read_jsonl_lines(paths.predictions)) {
        const json row = json::parse(line);
        ++prediction_total;
        if (row.at("correct").get<bool>()) ++prediction_correct;
    }
    if (prediction_total == 0) {
        throw StructuralError("predictions file is empty: " + paths.predictions.string());
    }

    std::size_t parse_ok_count = 0, missing_distribution = 0;
    for (const auto& rec : records) {
        if (rec.parse_ok) {
            ++parse_ok_count;
            if (!rec.impact_continuous) ++missing_distribution;
        }
    }

    BootstrapSpec bspec = config.bootstrap;
    bspec.seed = derive_seed(config.seed, "bootstrap");

    ordered_json out;
    out["run_id"] = run_config_hash(config);
    out["accuracy"] = {{"correct", prediction_correct},
                       {"total", prediction_total},
                       {"value", static_cast<double>(prediction_correct) /
                                     static_cast<double>(prediction_total)}};
    out["counts"] = {{"records", records.size()},
                     {"parse_ok", parse_ok_count},
                     {"parse_excluded", records.size() - parse_ok_count},
                     {"missing_distribution", missing_distribution}};

    out["ct"] = guarded_metric([&] {
        MetricResult base = ct_score(records);
        return with_ci(base, records,
                       [](const RecordRefs& refs) { return ct_score(materialize(refs)).value; },
                       bspec);
    });
    out["cct"] = guarded_metric([&] {
        MetricResult base = cct_score(records);
        base.n_missing_distribution = missing_distribution;
        return with_ci(base, records,
                       [](const RecordRefs& refs) { return cct_score(materialize(refs)).value; },
                       bspec);
    });
    out["phi_cct"] = guarded_metric([&] {
        MetricResult base = phi_cct_score(records);
        return with_ci(
            base, records,
            [](const RecordRefs& refs) { return phi_cct_score(materialize(refs)).value; },
            bspec);
    });
    out["tpr"] = guarded_metric([&] {
        const ConfusionRates rates = confusion_rates(records);
        MetricResult base;
        base.value = rates.tpr;
        base.n_used = parse_ok_count;
        base.n_excluded_parse = records.size() - parse_ok_count;
        base.positives = rates.positives();
        base.negatives = rates.negatives();
        return with_ci(
            base, records,
            [](const RecordRefs& refs) { return confusion_rates(materialize(refs)).tpr; },
            bspec);
    });
    out["fpr"] = guarded_metric([&] {
        const ConfusionRates rates = confusion_rates(records);
        MetricResult base;
        base.value = rates.fpr;
        base.n_used = parse_ok_count;
        base.n_excluded_parse = records.size() - parse_ok_count;
        base.positives = rates.positives();
        base.negatives = rates.negatives();
        return with_ci(
            base, records,
            [](const RecordRefs& refs) { return confusion_rates(materialize(refs)).fpr; },
            bspec);
    });

    atomic_write(paths.metrics, out.dump(2) + "\n");

    const json summary = json::parse(read_file(paths.intervene_summary));
    ordered_json manifest;
    manifest["run_id"] = run_config_hash(config);
    manifest["dataset_id"] = config.dataset.id;
    manifest["model"] = config.endpoint.model;
    manifest["mock_seed"] = config.mock_seed;
    manifest["prompt"] = prompt_echo(config.prompt);
    manifest["seed"] = config.seed;
    ordered_json counts;
    counts["examples"] = summary.at("counts").at("examples").get<std::size_t>();
    counts["candidates"] = summary.at("counts").at("candidates").get<std::size_t>();
    counts["scored"] = summary.at("counts").at("scored").get<std::size_t>();
    counts["selected"] = summary.at("counts").at("selected").get<std::size_t>();
    counts["records"] = records.size();
    counts["records_parse_ok"] = parse_ok_count;
    manifest["counts"] = std::move(counts);
    manifest["artifacts"] = {{"examples", "examples.jsonl"},
                             {"interventions", "interventions.jsonl"},
                             {"intervene_summary", "intervene_summary.json"},
                             {"responses", "responses.jsonl"},
                             {"predictions", "predictions.jsonl"},
                             {"records", "records.jsonl"},
                             {"metrics", "metrics.json"}};
    atomic_write(paths.manifest, manifest.dump(2) + "\n");
    return report;
}

RunManifest run_pipeline(const RunConfig& config) {
    run_intervene(config);
    run_evaluate(config);
    run_metrics(config);
    return load_manifest(run_paths(config).dir);
}

RunManifest load_manifest(const std::filesystem::path& run_dir) {
    std::filesystem::path dir = run_dir;
    if (dir.filename() == "manifest.json") dir = dir.parent_path();
    const std::filesystem::path manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw StructuralError("no manifest at " + manifest_path.string() +
                              "; the run has not completed");
    }
    const ordered_json j = ordered_json::parse(read_file(manifest_path));

    RunManifest manifest;
    manifest.run_id = j.at("run_id").get<std::string>();
    manifest.dir = dir;
    manifest.dataset_id = j.at("dataset_id").get<std::string>();
    manifest.model = j.at("model").get<std::string>();
    manifest.prompt = prompt_from_echo(j.at("prompt"), "manifest.prompt");
    manifest.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& item : j.at("counts").items()) {
        manifest.counts[item.key()] = item.value().get<std::size_t>();
    }
    manifest.paths.dir = dir;
    manifest.paths.examples = dir / "examples.jsonl";
    manifest.paths.interventions = dir / "interventions.jsonl";
    manifest.paths.intervene_summary = dir / "intervene_summary.json";
    manifest.paths.responses = dir / "responses.jsonl";
    manifest.paths.predictions = dir / "predictions.jsonl";
    manifest.paths.records = dir / "records.jsonl";
    manifest.paths.metrics = dir / "metrics.json";
    manifest.paths.manifest = manifest_path;
    manifest.paths.lock = dir / ".lock";
    return manifest;
}

// --------------------------------------------------------- F-AUROC aggregation

namespace {

std::string length_label(const PromptSpec& spec) {
    return spec.length ? *spec.length : "default";
}

}  // namespace

FaurocResult aggregate_fauroc(std::span<const RunManifest> runs, const BootstrapSpec& spec) {
    if (runs.empty()) throw StructuralError("fauroc aggregation needs at least one run");
    if (runs.size() > 5) {
        throw StructuralError("fauroc aggregation takes at most the five length settings");
    }
    std::set<std::string> lengths;
    for (const auto& run : runs) {
        if (run.dataset_id != runs[0].dataset_id || run.model != runs[0].model ||
            run.prompt.regime != runs[0].prompt.regime ||
            run.prompt.order != runs[0].prompt.order ||
            run.prompt.shots != runs[0].prompt.shots || run.seed != runs[0].seed) {
            throw StructuralError(
                "fauroc runs must share dataset, model, regime, order, shots, and seed; " +
                run.run_id + " differs from " + runs[0].run_id);
        }
        if (!lengths.insert(length_label(run.prompt)).second) {
            throw StructuralError("fauroc runs must differ in length instruction; \"" +
                                  length_label(run.prompt) + "\" appears twice");
        }
    }

    std::vector<std::vector<InterventionRecord>> per_run;
    per_run.reserve(runs.size());
    for (const auto& run : runs) per_run.push_back(load_records(run.paths.records));

    FaurocResult result;
    std::size_t pooled_positives = 0, pooled_negatives = 0, total_records = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        total_records += per_run[i].size();
        try {
            const ConfusionRates rates = confusion_rates(per_run[i]);
            result.points.push_back({rates.fpr, rates.tpr, length_label(runs[i].prompt)});
            pooled_positives += rates.positives();
            pooled_negatives += rates.negatives();
        } catch (const DegenerateStatistic&) {
            result.metric.flags.push_back("dropped:" + length_label(runs[i].prompt));
        }
    }
    if (result.points.empty()) {
        throw DegenerateStatistic("points", "no valid confusion point in any run");
    }
    result.metric.value = f_auroc(result.points);
    result.metric.n_used = total_records;
    result.metric.positives = pooled_positives;
    result.metric.negatives = pooled_negatives;

    // Shared clusters: the sorted union of example ids across runs. Every
    // resample applies one cluster draw to all runs simultaneously.
    std::set<std::string> cluster_set;
    for (const auto& records : per_run) {
        for (const auto& rec : records) cluster_set.insert(rec.example_id);
    }
    const std::vector<std::string> clusters(cluster_set.begin(), cluster_set.end());
    std::vector<std::unordered_map<std::string, RecordRefs>> grouped(per_run.size());
    for (std::size_t i = 0; i < per_run.size(); ++i) {
        for (const auto& rec : per_run[i]) grouped[i][rec.example_id].push_back(&rec);
    }

    std::vector<double> stats;
    stats.reserve(spec.resamples);
    std::size_t degenerate = 0;
    for (std::size_t r = 0; r < spec.resamples; ++r) {
        const auto draw = resample_cluster_draw(clusters.size(), spec.seed, r);
        std::vector<RocPoint> points;
        for (std::size_t i = 0; i < per_run.size(); ++i) {
            RecordRefs sample;
            for (const std::size_t c : draw) {
                const auto it = grouped[i].find(clusters[c]);
                if (it == grouped[i].end()) continue;
                sample.insert(sample.end(), it->second.begin(), it->second.end());
            }
            try {
                const ConfusionRates rates = confusion_rates(materialize(sample));
                points.push_back({rates.fpr, rates.tpr, length_label(runs[i].prompt)});
            } catch (const DegenerateStatistic&) {
            } catch (const StructuralError&) {
                // An empty per-run sample cannot form a confusion point.
            }
        }
        if (points.empty()) {
            ++degenerate;
            continue;
        }
        stats.push_back(f_auroc(points));
    }
    result.metric.degenerate_resamples = degenerate;
    if (degenerate * 2 > spec.resamples) {
        throw DegenerateStatistic("resamples", "fauroc bootstrap degenerate on " +
                                                   std::to_string(degenerate) + " of " +
                                                   std::to_string(spec.resamples) +
                                                   " resamples");
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = 1.0 - spec.confidence;
    result.metric.ci_low = quantile_sorted(stats, alpha / 2.0);
    result.metric.ci_high = quantile_sorted(stats, 1.0 - alpha / 2.0);
    if (degenerate > 0) result.metric.flags.push_back("degenerate_resamples_skipped");
    return result;
}

// ----------------------------------------------------------------- plot data

std::string_view plot_kind_name(PlotKind kind) {
    switch (kind) {
        case PlotKind::roc_scatter: return "roc_scatter";
        case PlotKind::phi_contours: return "phi_contours";
        case PlotKind::impact_histogram: return "impact_histogram";
        case PlotKind::accuracy_vs_faithfulness: return "accuracy_vs_faithfulness";
    }
    throw StructuralError("invalid plot kind value");
}

std::optional<PlotKind> plot_kind_from_name(std::string_view name) {
    if (name == "roc_scatter") return PlotKind::roc_scatter;
    if (name == "phi_contours") return PlotKind::phi_contours;
    if (name == "impact_histogram") return PlotKind::impact_histogram;
    if (name == "accuracy_vs_faithfulness") return PlotKind::accuracy_vs_faithfulness;
    return std::nullopt;
}

namespace {

std::string run_descriptor(const RunManifest& run) {
    return run.run_id + "," + run.dataset_id + "," + std::string(regime_name(run.prompt.regime)) +
           "," + std::string(order_name(run.prompt.order)) + "," + length_label(run.prompt);
}

std::string csv_roc_scatter(std::span<const RunManifest> runs) {
    std::string csv = "run_id,dataset,regime,order,length,fpr,tpr,positives,negatives\n";
    for (const auto& run : runs) {
        const auto records = load_records(run.paths.records);
        try {
            const ConfusionRates rates = confusion_rates(records);
            csv += run_descriptor(run) + "," + fmt_double(rates.fpr) + "," +
                   fmt_double(rates.tpr) + "," + std::to_string(rates.positives()) + "," +
                   std::to_string(rates.negatives()) + "\n";
        } catch (const DegenerateStatistic& e) {
            throw DegenerateStatistic(e.variable(),
                                      std::string(e.what()) + " (run " + run.run_id + ")");
        }
    }
    return csv;
}

std::string csv_impact_histogram(std::span<const RunManifest> runs) {
    constexpr std::size_t kBins = 20;
    std::vector<std::size_t> counts(kBins, 0);
    for (const auto& run : runs) {
        for (const auto& rec : load_records(run.paths.records)) {
            if (!rec.impact_continuous) continue;
            const double v = *rec.impact_continuous;
            std::size_t bin = static_cast<std::size_t>(v * static_cast<double>(kBins));
            if (bin >= kBins) bin = kBins - 1;  // v == 1.0 lands in the top bin
            ++counts[bin];
        }
    }
    std::string csv = "bin_low,bin_high,count\n";
    for (std::size_t b = 0; b < kBins; ++b) {
        csv += fmt_double(static_cast<double>(b) / kBins) + "," +
               fmt_double(static_cast<double>(b + 1) / kBins) + "," +
               std::to_string(counts[b]) + "\n";
    }
    return csv;
}

std::string csv_phi_contours(std::span<const RunManifest> runs) {
    std::size_t positives = 0, negatives = 0;
    for (const auto& run : runs) {
        for (const auto& rec : load_records(run.paths.records)) {
            if (!rec.parse_ok) continue;
            rec.impact_discrete ? ++positives : ++negatives;
        }
    }
    const ClassBalance balance = ClassBalance::from_counts(positives, negatives);
    std::string csv = "fpr,tpr,k,phi\n";
    for (const auto& cell : phi_contour_grid(balance, 101)) {
        csv += fmt_double(cell.fpr) + "," + fmt_double(cell.tpr) + "," +
               fmt_double(balance.k) + ",";
        if (std::isnan(cell.phi)) csv += "\n";
        else csv += fmt_double(cell.phi) + "\n";
    }
    return csv;
}

std::optional<double> metric_value(const json& metrics, const std::string& name) {
    const auto& entry = metrics.at(name);
    if (entry.contains("unavailable")) return std::nullopt;
    return entry.at("value").get<double>();
}

}  // namespace

std::vector<std::filesystem::path> emit_plot_data(std::span<const RunManifest> runs,
                                                  PlotKind kind,
                                                  const std::filesystem::path& out_path,
                                                  const BootstrapSpec& spec) {
    if (runs.empty()) throw StructuralError("plot data needs at least one run");
    for (const auto& run : runs) {
        if (!std::filesystem::exists(run.paths.records)) {
            throw StructuralError("missing records file: " + run.paths.records.string());
        }
    }
    if (!out_path.parent_path().empty()) {
        std::filesystem::create_directories(out_path.parent_path());
    }

    if (kind == PlotKind::roc_scatter) {
        atomic_write(out_path, csv_roc_scatter(runs));
        return {out_path};
    }
    if (kind == PlotKind::impact_histogram) {
        atomic_write(out_path, csv_impact_histogram(runs));
        return {out_path};
    }
    if (kind == PlotKind::phi_contours) {
        atomic_write(out_path, csv_phi_contours(runs));
        return {out_path};
    }

    // accuracy_vs_faithfulness
    std::string csv = "run_id,dataset,regime,order,length,accuracy,ct,cct,phi_cct,tpr,fpr\n";
    std::vector<double> accuracies, phis;
    for (const auto& run : runs) {
        if (!std::filesystem::exists(run.paths.metrics)) {
            throw StructuralError("missing metrics file: " + run.paths.metrics.string());
        }
        const json metrics = json::parse(read_file(run.paths.metrics));
        const double accuracy = metrics.at("accuracy").at("value").get<double>();
        csv += run_descriptor(run) + "," + fmt_double(accuracy);
        for (const std::string name : {"ct", "cct", "phi_cct", "tpr", "fpr"}) {
            const auto value = metric_value(metrics, name);
            csv += ",";
            if (value) csv += fmt_double(*value);
        }
        csv += "\n";
        if (const auto phi = metric_value(metrics, "phi_cct")) {
            accuracies.push_back(accuracy);
            phis.push_back(*phi);
        }
    }
    // Spearman summary: rank correlation of accuracy against phi-CCT over
    // runs, with a pair-resampling bootstrap. A degenerate correlation (too
    // few pairs, tied-out variance, or mostly degenerate resamples) leaves
    // empty cells rather than failing the export.
    std::optional<double> rho, rho_low, rho_high;
    std::size_t degenerate = 0;
    if (accuracies.size() >= 2) {
        try {
            rho = spearman_rank(accuracies, phis);
        } catch (const DegenerateStatistic&) {
        }
    }
    if (rho) {
        std::vector<double> stats;
        stats.reserve(spec.resamples);
        for (std::size_t r = 0; r < spec.resamples; ++r) {
            const auto draw = resample_cluster_draw(accuracies.size(), spec.seed, r);
            std::vector<double> xs, ys;
            xs.reserve(draw.size());
            ys.reserve(draw.size());
            for (const std::size_t i : draw) {
                xs.push_back(accuracies[i]);
                ys.push_back(phis[i]);
            }
            try {
                stats.push_back(spearman_rank(xs, ys));
            } catch (const DegenerateStatistic&) {
                ++degenerate;
            }
        }
        if (degenerate * 2 > spec.resamples) {
            rho.reset();
        } else {
            std::sort(stats.begin(), stats.end());
            const double alpha = 1.0 - spec.confidence;
            rho_low = quantile_sorted(stats, alpha / 2.0);
            rho_high = quantile_sorted(stats, 1.0 - alpha / 2.0);
        }
    }

    std::filesystem::path summary_path = out_path;
    summary_path.replace_filename(out_path.stem().string() + "_summary" +
                                  out_path.extension().string());
    std::string summary = "n_runs,n_pairs,spearman,ci_low,ci_high,degenerate_resamples\n";
    summary += std::to_string(runs.size()) + "," + std::to_string(accuracies.size()) + ",";
    if (rho) summary += fmt_double(*rho);
    summary += ",";
    if (rho_low) summary += fmt_double(*rho_low);
    summary += ",";
    if (rho_high) summary += fmt_double(*rho_high);
    summary += "," + std::to_string(degenerate) + "\n";

    atomic_write(out_path, csv);
    atomic_write(summary_path, summary);
    return {out_path, summary_path};
}

}  // namespace faithkit
