#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace faithkit {

struct Example {
    std::string example_id;
    std::string split;
    std::vector<std::pair<std::string, std::string>> fields;
    std::string gold_label;
    std::optional<std::string> human_explanation;

    const std::string& field(std::string_view name) const;
    bool operator==(const Example&) const = default;
};

struct DatasetInfo {
    std::string id;
    std::vector<std::string> labels;
    std::vector<std::string> field_names;
    // Upper-case names used for prompt lines, parallel to field_names.
    std::vector<std::string> field_display_names;
    std::vector<std::string> intervention_fields;
    // Marker naming the answer line, without the trailing colon.
    std::string answer_marker;
    std::string description;
    std::string description_without_explanation;
    // Rendering of the label set for the "should be one of" reminder.
    std::string label_tuple;
    std::size_t reference_test_size = 0;

    bool is_label(std::string_view value) const;
    const std::string& display_name(std::string_view field_name) const;
};

const DatasetInfo& dataset_info(std::string_view dataset_id);
std::vector<std::string> dataset_ids();

struct LoadedDataset {
    std::vector<Example> train;
    std::vector<Example> test;
};

// Reads normalized JSONL (one Example per line); schema errors name the
// offending line and field.
LoadedDataset load_dataset(const std::filesystem::path& path, std::string_view dataset_id);

std::string serialize_example(const Example& example);

// Splits `total` insertions as evenly as possible over the test examples;
// the examples receiving the remainder are picked by a seeded shuffle of the
// sorted ids, so the result does not depend on input order.
std::map<std::string, std::size_t> allocate_interventions(std::span<const Example> test,
                                                          std::size_t total,
                                                          std::uint64_t seed);

}  // namespace faithkit
