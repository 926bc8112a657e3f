#include "faithkit/client.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "faithkit/cache.hpp"
#include "faithkit/errors.hpp"

namespace faithkit {

namespace {

using nlohmann::ordered_json;

bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

std::string canonical_request_json(const ModelRequest& request, const std::string& model) {
    ordered_json body;
    body["model"] = model;
    body["messages"] = ordered_json::array(
        {ordered_json{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["logprobs"] = request.logprobs;
    if (request.logprobs) body["top_logprobs"] = request.top_logprobs;
    if (request.seed) body["seed"] = *request.seed;
    return body.dump();
}

Completion parse_completion_body(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw StructuralError(std::string("malformed model response: ") + e.what());
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw StructuralError("malformed model response: no choices");
    }
    const auto& choice = j["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
        throw StructuralError("malformed model response: no message content");
    }
    Completion out;
    out.text = choice["message"]["content"].get<std::string>();
    if (choice.value("finish_reason", std::string("stop")) == "length") {
        out.flags.push_back("truncated");
    }
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
        for (const auto& entry : choice["logprobs"]["content"]) {
            TokenInfo info;
            info.token = entry.value("token", std::string());
            info.logprob = entry.value("logprob", 0.0);
            if (entry.contains("top_logprobs") && entry["top_logprobs"].is_array()) {
                for (const auto& cand : entry["top_logprobs"]) {
                    info.top.push_back(
                        {cand.value("token", std::string()), cand.value("logprob", 0.0)});
                }
            }
            out.tokens.push_back(std::move(info));
        }
    }
    return out;
}

ModelClient::ModelClient(ClientConfig config) : config_(std::move(config)) {
    if (config_.max_attempts == 0) throw StructuralError("client needs at least one attempt");
    if (config_.concurrency == 0) throw StructuralError("client concurrency must be positive");
}

std::string ModelClient::fetch_body(const ModelRequest& request) {
    const std::string body = canonical_request_json(request, config_.model);
    const std::string key = sha256_hex(body);

    std::optional<ResponseCache> cache;
    if (config_.cache_dir) {
        cache.emplace(*config_.cache_dir);
        if (auto hit = cache->get(key)) return *hit;
    }

    httplib::Client http(config_.base_url);
    http.set_connection_timeout(10, 0);
    http.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    int last_status = 0;
    std::string last_error;
    for (std::size_t attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        auto res = http.Post("/v1/chat/completions", headers, body, "application/json");
        if (res && res->status == 200) {
            if (cache) cache->put(key, res->body);
            return res->body;
        }
        if (res) {
            last_status = res->status;
            last_error = "HTTP " + std::to_string(res->status);
            if (!retryable_status(res->status)) {
                throw TransportError("model endpoint rejected request: " + last_error,
                                     last_status, static_cast<int>(attempt));
            }
        } else {
            last_status = 0;
            last_error = httplib::to_string(res.error());
        }
        if (attempt < config_.max_attempts) {
            const auto delay =
                std::chrono::milliseconds(config_.backoff_initial_ms << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
    }
    throw TransportError("model endpoint unreachable after " +
                             std::to_string(config_.max_attempts) + " attempts: " + last_error,
                         last_status, static_cast<int>(config_.max_attempts));
}

Completion ModelClient::complete(const ModelRequest& request) {
    return parse_completion_body(fetch_body(request));
}

std::vector<Completion> ModelClient::complete_many(const std::vector<ModelRequest>& requests) {
    std::vector<Completion> results(requests.size());
    if (requests.empty()) return results;

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) break;
            try {
                results[i] = complete(requests[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                break;
            }
        }
    };

    const std::size_t n_threads = std::min(config_.concurrency, requests.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();

    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace faithkit
