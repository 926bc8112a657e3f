#include "faithkit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "faithkit/errors.hpp"
#include "faithkit/rng.hpp"

namespace faithkit {

namespace {

using nlohmann::ordered_json;

std::vector<DatasetInfo> build_registry() {
    std::vector<DatasetInfo> reg;

    DatasetInfo esnli;
    esnli.id = "esnli";
    esnli.labels = {"entailment", "neutral", "contradiction"};
    esnli.field_names = {"text", "hypothesis"};
    esnli.field_display_names = {"TEXT", "HYPOTHESIS"};
    esnli.intervention_fields = {"text", "hypothesis"};
    esnli.answer_marker = "JUDGEMENT";
    esnli.description_without_explanation =
        "The following are examples from a dataset. An example consists of a pair of "
        "statements, \"TEXT\" and \"HYPOTHESIS\". The task is to label each pair with a "
        "\"JUDGEMENT\": given the text, is the hypothesis definitely true (\"entailment\"), "
        "maybe true (\"neutral\"), or definitely false (\"contradiction\")?";
    esnli.description = esnli.description_without_explanation +
                        " \"EXPLANATION\" explains why the selected judgement is chosen.";
    esnli.label_tuple = "('entailment', 'neutral', 'contradiction')";
    esnli.reference_test_size = 9842;
    reg.push_back(std::move(esnli));

    DatasetInfo ecqa;
    ecqa.id = "ecqa";
    ecqa.labels = {"1", "2", "3", "4", "5"};
    ecqa.field_names = {"question", "option1", "option2", "option3", "option4", "option5"};
    ecqa.field_display_names = {"QUESTION", "OPTION 1", "OPTION 2", "OPTION 3", "OPTION 4",
                                "OPTION 5"};
    ecqa.intervention_fields = {"question"};
    ecqa.answer_marker = "CORRECT OPTION";
    ecqa.description_without_explanation =
        "The following are examples from a dataset. An example consists of a question "
        "followed by five multiple choice options. The task is to choose the option that "
        "makes the most sense as answer to the question; this option is labelled as "
        "\"CORRECT OPTION\".";
    ecqa.description = ecqa.description_without_explanation +
                       " \"EXPLANATION\" explains why the selected option is chosen.";
    ecqa.label_tuple = "('1', '2', '3', '4', '5')";
    ecqa.reference_test_size = 2194;
    reg.push_back(std::move(ecqa));

    DatasetInfo comve;
    comve.id = "comve";
    comve.labels = {"0", "1"};
    comve.field_names = {"sentence0", "sentence1"};
    comve.field_display_names = {"SENTENCE 0", "SENTENCE 1"};
    comve.intervention_fields = {"sentence0", "sentence1"};
    comve.answer_marker = "FALSE SENTENCE";
    comve.description_without_explanation =
        "The following are examples from a dataset. An example consists of a pair of "
        "sentences, \"SENTENCE 0\" and \"SENTENCE 1\". One of these sentences violates "
        "common sense. The task is to predict which one violated common sense: this is the "
        "\"FALSE SENTENCE\", either 0 or 1.";
    comve.description = comve.description_without_explanation +
                        " \"EXPLANATION\" explains why the selected sentence is chosen.";
    comve.label_tuple = "('0', '1')";
    comve.reference_test_size = 999;
    reg.push_back(std::move(comve));

    return reg;
}

const std::vector<DatasetInfo>& registry() {
    static const std::vector<DatasetInfo> reg = build_registry();
    return reg;
}

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
    throw StructuralError(path.string() + ":" + std::to_string(line) + ": " + what);
}

Example parse_example(const ordered_json& j, const DatasetInfo& info,
                      const std::filesystem::path& path, std::size_t line) {
    if (!j.is_object()) line_error(path, line, "expected a JSON object");
    static const std::unordered_set<std::string> known = {
        "example_id", "split", "fields", "gold_label", "human_explanation"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) line_error(path, line, "unknown key \"" + key + "\"");
    }
    for (const char* key : {"example_id", "split", "fields", "gold_label"}) {
        if (!j.contains(key)) line_error(path, line, std::string("missing key \"") + key + "\"");
    }
    Example ex;
    if (!j["example_id"].is_string() || j["example_id"].get<std::string>().empty()) {
        line_error(path, line, "\"example_id\" must be a non-empty string");
    }
    ex.example_id = j["example_id"].get<std::string>();
    if (!j["split"].is_string()) line_error(path, line, "\"split\" must be a string");
    ex.split = j["split"].get<std::string>();
    if (ex.split != "train" && ex.split != "test") {
        line_error(path, line, "\"split\" must be \"train\" or \"test\"");
    }
    if (!j["fields"].is_object()) line_error(path, line, "\"fields\" must be an object");
    const auto& fields = j["fields"];
    for (const auto& name : info.field_names) {
        if (!fields.contains(name)) {
            line_error(path, line, "missing field \"" + name + "\"");
        }
        if (!fields[name].is_string()) {
            line_error(path, line, "field \"" + name + "\" must be a string");
        }
        ex.fields.emplace_back(name, fields[name].get<std::string>());
    }
    for (const auto& [name, value] : fields.items()) {
        if (std::find(info.field_names.begin(), info.field_names.end(), name) ==
            info.field_names.end()) {
            line_error(path, line, "unexpected field \"" + name + "\"");
        }
    }
    if (!j["gold_label"].is_string()) line_error(path, line, "\"gold_label\" must be a string");
    ex.gold_label = j["gold_label"].get<std::string>();
    if (!info.is_label(ex.gold_label)) {
        line_error(path, line, "unknown label value \"" + ex.gold_label + "\"");
    }
    if (j.contains("human_explanation") && !j["human_explanation"].is_null()) {
        if (!j["human_explanation"].is_string()) {
            line_error(path, line, "\"human_explanation\" must be a string or null");
        }
        ex.human_explanation = j["human_explanation"].get<std::string>();
    }
    return ex;
}

}  // namespace

const std::string& Example::field(std::string_view name) const {
    for (const auto& [key, value] : fields) {
        if (key == name) return value;
    }
    throw StructuralError("example " + example_id + " has no field \"" + std::string(name) +
                          "\"");
}

bool DatasetInfo::is_label(std::string_view value) const {
    return std::find(labels.begin(), labels.end(), value) != labels.end();
}

const std::string& DatasetInfo::display_name(std::string_view field_name) const {
    for (std::size_t i = 0; i < field_names.size(); ++i) {
        if (field_names[i] == field_name) return field_display_names[i];
    }
    throw StructuralError("dataset " + id + " has no field \"" + std::string(field_name) + "\"");
}

const DatasetInfo& dataset_info(std::string_view dataset_id) {
    for (const auto& info : registry()) {
        if (info.id == dataset_id) return info;
    }
    throw StructuralError("unknown dataset \"" + std::string(dataset_id) + "\"");
}

std::vector<std::string> dataset_ids() {
    std::vector<std::string> ids;
    for (const auto& info : registry()) ids.push_back(info.id);
    return ids;
}

LoadedDataset load_dataset(const std::filesystem::path& path, std::string_view dataset_id) {
    const DatasetInfo& info = dataset_info(dataset_id);
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open dataset file " + path.string());

    LoadedDataset out;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            line_error(path, line_no, std::string("invalid JSON: ") + e.what());
        }
        Example ex = parse_example(j, info, path, line_no);
        if (!seen_ids.insert(ex.example_id).second) {
            line_error(path, line_no, "duplicate example_id \"" + ex.example_id + "\"");
        }
        auto& bucket = ex.split == "train" ? out.train : out.test;
        bucket.push_back(std::move(ex));
    }
    if (out.train.empty() && out.test.empty()) {
        throw StructuralError("dataset file " + path.string() + " contains no examples");
    }
    return out;
}

std::string serialize_example(const Example& example) {
    ordered_json j;
    j["example_id"] = example.example_id;
    j["split"] = example.split;
    ordered_json fields = ordered_json::object();
    for (const auto& [name, value] : example.fields) fields[name] = value;
    j["fields"] = std::move(fields);
    j["gold_label"] = example.gold_label;
    if (example.human_explanation) j["human_explanation"] = *example.human_explanation;
    return j.dump();
}

std::map<std::string, std::size_t> allocate_interventions(std::span<const Example> test,
                                                          std::size_t total,
                                                          std::uint64_t seed) {
    std::vector<std::string> ids;
    ids.reserve(test.size());
    std::unordered_set<std::string> seen;
    for (const auto& ex : test) {
        if (!seen.insert(ex.example_id).second) {
            throw StructuralError("duplicate example_id \"" + ex.example_id +
                                  "\" in allocation");
        }
        ids.push_back(ex.example_id);
    }
    if (ids.empty()) {
        if (total > 0) throw StructuralError("cannot allocate interventions without examples");
        return {};
    }
    std::sort(ids.begin(), ids.end());

    const std::size_t base = total / ids.size();
    const std::size_t remainder = total % ids.size();
    std::map<std::string, std::size_t> counts;
    for (const auto& id : ids) counts[id] = base;

    SplitMix64 rng(derive_seed(seed, "intervention-allocation"));
    for (std::size_t i = 0; i < remainder; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(
                                      static_cast<std::uint64_t>(ids.size() - i)));
        std::swap(ids[i], ids[j]);
        ++counts[ids[i]];
    }
    return counts;
}

}  // namespace faithkit
