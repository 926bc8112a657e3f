#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "faithkit/completion.hpp"

namespace faithkit {

struct ModelRequest {
    std::string prompt;
    double temperature = 0.0;
    std::size_t max_tokens = 512;
    bool logprobs = true;
    std::size_t top_logprobs = 20;
    std::optional<std::uint64_t> seed;
};

struct ClientConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string model = "mock-model";
    std::string api_key;
    std::size_t max_attempts = 5;
    unsigned backoff_initial_ms = 250;
    std::size_t concurrency = 8;
    std::optional<std::filesystem::path> cache_dir;
};

// Wire body sent to the chat-completions endpoint; also the cache key
// preimage, so it deliberately excludes the base URL.
std::string canonical_request_json(const ModelRequest& request, const std::string& model);

// Decodes a chat-completions response body into a Completion.
Completion parse_completion_body(const std::string& body);

class ModelClient {
  public:
    explicit ModelClient(ClientConfig config);

    Completion complete(const ModelRequest& request);

    // Runs requests through a bounded worker pool; results are positional,
    // so scheduling order cannot affect outputs.
    std::vector<Completion> complete_many(const std::vector<ModelRequest>& requests);

    const ClientConfig& config() const { return config_; }

  private:
    std::string fetch_body(const ModelRequest& request);

    ClientConfig config_;
};

}  // namespace faithkit
