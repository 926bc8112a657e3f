#include "faithkit/mock_model.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "faithkit/cache.hpp"
#include "faithkit/dataset.hpp"
#include "faithkit/errors.hpp"
#include "faithkit/rng.hpp"
#include "faithkit/textutil.hpp"

namespace faithkit {

namespace {

using nlohmann::ordered_json;

constexpr double kSalienceRate = 0.25;
constexpr double kGarbageRate = 0.02;
constexpr std::array<double, 5> kSalientMentionRate = {0.60, 0.75, 0.85, 0.92, 0.97};
constexpr std::array<double, 5> kOtherMentionRate = {0.05, 0.12, 0.25, 0.40, 0.55};

double coin(std::uint64_t seed, const std::string& tag) {
    return SplitMix64(derive_seed(seed, tag)).uniform01();
}

struct MockRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    std::size_t max_tokens = 512;
    bool logprobs = false;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

MockRequest parse_request(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw StructuralError(std::string("bad request body: ") + e.what());
    }
    if (!j.contains("messages") || !j["messages"].is_array() || j["messages"].empty() ||
        !j["messages"][0].contains("content") || !j["messages"][0]["content"].is_string()) {
        throw StructuralError("bad request body: missing messages[0].content");
    }
    MockRequest out;
    out.model = j.value("model", std::string("mock-model"));
    out.prompt = j["messages"][0]["content"].get<std::string>();
    out.temperature = j.value("temperature", 0.0);
    out.max_tokens = j.value("max_tokens", std::size_t{512});
    out.logprobs = j.value("logprobs", false);
    if (j.contains("seed") && j["seed"].is_number_unsigned()) {
        out.seed = j["seed"].get<std::uint64_t>();
        out.has_seed = true;
    }
    return out;
}

// Word-piece tokens: newlines stand alone, words keep one leading space.
std::vector<std::string> tokenize_completion(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '\n') {
            tokens.emplace_back("\n");
            ++i;
            continue;
        }
        std::string token;
        if (text[i] == ' ') {
            token.push_back(' ');
            ++i;
            if (i >= text.size() || text[i] == ' ' || text[i] == '\n') {
                tokens.push_back(std::move(token));
                continue;
            }
        }
        while (i < text.size() && text[i] != ' ' && text[i] != '\n') {
            token.push_back(text[i]);
            ++i;
        }
        tokens.push_back(std::move(token));
    }
    return tokens;
}

struct TokenEntry {
    std::string token;
    double logprob;
    std::vector<std::pair<std::string, double>> top;
};

ordered_json render_response(const std::string& request_body, const MockRequest& req,
                             const std::string& text, std::vector<TokenEntry> tokens,
                             bool truncated) {
    ordered_json response;
    response["id"] = "cmpl-mock-" + sha256_hex(request_body).substr(0, 12);
    response["object"] = "chat.completion";
    response["created"] = 0;
    response["model"] = req.model;
    ordered_json choice;
    choice["index"] = 0;
    choice["message"] = ordered_json{{"role", "assistant"}, {"content", text}};
    if (tokens.empty()) {
        choice["logprobs"] = nullptr;
    } else {
        ordered_json content = ordered_json::array();
        for (const auto& entry : tokens) {
            ordered_json tok;
            tok["token"] = entry.token;
            tok["logprob"] = entry.logprob;
            ordered_json top = ordered_json::array();
            for (const auto& [cand, lp] : entry.top) {
                top.push_back(ordered_json{{"token", cand}, {"logprob", lp}});
            }
            tok["top_logprobs"] = std::move(top);
            content.push_back(std::move(tok));
        }
        choice["logprobs"] = ordered_json{{"content", std::move(content)}};
    }
    choice["finish_reason"] = truncated ? "length" : "stop";
    response["choices"] = ordered_json::array({std::move(choice)});
    const std::size_t prompt_tokens = tokenize_ws(req.prompt).size();
    response["usage"] = ordered_json{{"prompt_tokens", prompt_tokens},
                                     {"completion_tokens", tokens.size()},
                                     {"total_tokens", prompt_tokens + tokens.size()}};
    return response;
}

std::string naturalness_response(const std::string& request_body, const MockRequest& req,
                                 std::uint64_t server_seed) {
    const std::string open_tag = "Sentence 2: \"";
    const std::size_t open = req.prompt.find(open_tag);
    const std::size_t close = req.prompt.find("\"\n\nDoes the second sentence", open);
    if (open == std::string::npos || close == std::string::npos) {
        throw StructuralError("bad naturalness prompt shape");
    }
    const std::string sentence2 =
        req.prompt.substr(open + open_tag.size(), close - open - open_tag.size());
    const double score = 0.04 + 0.92 * coin(server_seed, "naturalness:" + sentence2);

    bool yes = score >= 0.5;
    std::vector<TokenEntry> tokens;
    if (req.temperature > 0.0) {
        const std::string vote_tag =
            "vote:" + std::to_string(req.has_seed ? req.seed : 0) + ":" + sentence2;
        yes = coin(server_seed, vote_tag) < score;
    }
    const std::string text =
        yes ? "Yes, the second sentence makes sense." : "No, the second sentence is off.";
    if (req.temperature == 0.0 && req.logprobs) {
        const auto pieces = tokenize_completion(text);
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            TokenEntry entry;
            entry.token = pieces[i];
            if (i == 0) {
                const double p_yes = std::max(1e-6, std::min(1.0 - 1e-6, score));
                entry.top = {{"Yes", std::log(p_yes)}, {"No", std::log1p(-p_yes)}};
                if (!yes) std::swap(entry.top[0], entry.top[1]);
                entry.logprob = entry.top[0].second;
            } else {
                entry.logprob = std::log(0.98);
                entry.top = {{entry.token, entry.logprob}};
            }
            tokens.push_back(std::move(entry));
        }
    }
    return render_response(request_body, req, text, std::move(tokens), false).dump();
}

struct QueryInfo {
    const DatasetInfo* dataset = nullptr;
    bool instructed = false;
    bool explain_first = false;
    int verbosity = 2;
    std::vector<std::pair<std::string, std::string>> fields;
};

QueryInfo analyze_prompt(const std::string& prompt) {
    QueryInfo info;
    for (const auto& id : dataset_ids()) {
        const DatasetInfo& ds = dataset_info(id);
        if (prompt.find(ds.answer_marker + ":") != std::string::npos) {
            info.dataset = &ds;
            break;
        }
    }
    if (!info.dataset) throw StructuralError("prompt names no known dataset");
    const std::string marker = info.dataset->answer_marker;

    info.instructed =
        prompt.find("Now I'm going to show you the beginning") != std::string::npos;
    if (info.instructed) {
        info.explain_first =
            prompt.find("beginning your answer with \"EXPLANATION:\"") != std::string::npos;
    } else if (prompt.size() > 13 &&
               prompt.rfind("\nEXPLANATION:") == prompt.size() - 13) {
        info.explain_first = true;
    } else if (prompt.rfind("\n" + marker + ":") == prompt.size() - marker.size() - 2) {
        info.explain_first = false;
    } else {
        throw StructuralError("prompt has no recognizable completion point");
    }

    if (prompt.find("Your explanation should be very concise.") != std::string::npos) {
        info.verbosity = 0;
    } else if (prompt.find("Your explanation should be very comprehensive.") !=
               std::string::npos) {
        info.verbosity = 4;
    } else if (prompt.find("Your explanation should be concise.") != std::string::npos) {
        info.verbosity = 1;
    } else if (prompt.find("Your explanation should be comprehensive.") != std::string::npos) {
        info.verbosity = 3;
    }

    std::size_t block_start = prompt.rfind("\n\n");
    block_start = block_start == std::string::npos ? 0 : block_start + 2;
    std::string block = prompt.substr(block_start);
    if (!info.instructed) {
        const std::size_t last_line = block.rfind('\n');
        if (last_line == std::string::npos) {
            throw StructuralError("query block has no field lines");
        }
        block = block.substr(0, last_line);
    }

    std::size_t current = std::string::npos;
    std::size_t line_start = 0;
    const auto& names = info.dataset->field_display_names;
    while (line_start <= block.size()) {
        std::size_t line_end = block.find('\n', line_start);
        if (line_end == std::string::npos) line_end = block.size();
        const std::string line = block.substr(line_start, line_end - line_start);
        bool matched = false;
        for (std::size_t i = 0; i < names.size(); ++i) {
            const std::string prefix = names[i] + ": ";
            if (line.size() >= prefix.size() && line.compare(0, prefix.size(), prefix) == 0) {
                info.fields.emplace_back(info.dataset->field_names[i],
                                         line.substr(prefix.size()));
                current = info.fields.size() - 1;
                matched = true;
                break;
            }
        }
        if (!matched) {
            if (current == std::string::npos) {
                throw StructuralError("unrecognized query line: " + line);
            }
            info.fields[current].second += "\n" + line;
        }
        if (line_end == block.size()) break;
        line_start = line_end + 1;
    }
    if (info.fields.empty()) throw StructuralError("query block has no fields");
    return info;
}

std::string task_response(const std::string& request_body, const MockRequest& req,
                          std::uint64_t server_seed) {
    const QueryInfo query = analyze_prompt(req.prompt);
    const DatasetInfo& ds = *query.dataset;

    std::vector<std::string> words;
    std::unordered_set<std::string> seen;
    std::string full_text;
    for (const auto& [name, value] : query.fields) {
        if (!full_text.empty()) full_text += "\n";
        full_text += value;
        for (const auto& token : tokenize_ws(value)) {
            const std::string norm = ascii_lower(strip_edge_punct(token.text));
            if (norm.empty() || !seen.insert(norm).second) continue;
            words.push_back(norm);
        }
    }

    std::vector<std::string> salient;
    for (const auto& word : words) {
        if (coin(server_seed, "salience:" + word) < kSalienceRate) salient.push_back(word);
    }
    const std::string joined = join(salient, "\x1f");

    const std::size_t n_labels = ds.labels.size();
    SplitMix64 label_rng(derive_seed(server_seed, "label:" + ds.id + ":" + joined));
    const std::size_t label_index = static_cast<std::size_t>(label_rng.uniform_index(n_labels));
    const std::string& label = ds.labels[label_index];

    const double conf_u = coin(server_seed, "confidence:" + ds.id + ":" + joined);
    const double jitter_u = coin(server_seed, "jitter:" + ds.id + ":" + full_text);
    const double p_star = 0.55 + 0.42 * conf_u + 0.02 * (jitter_u - 0.5);

    std::vector<double> probs(n_labels, 0.0);
    probs[label_index] = p_star;
    double rest_total = 0.0;
    std::vector<double> rest(n_labels, 0.0);
    for (std::size_t i = 0; i < n_labels; ++i) {
        if (i == label_index) continue;
        rest[i] = 0.1 + coin(server_seed, "rest:" + ds.id + ":" + joined + ":" + ds.labels[i]);
        rest_total += rest[i];
    }
    for (std::size_t i = 0; i < n_labels; ++i) {
        if (i != label_index) probs[i] = (1.0 - p_star) * rest[i] / rest_total;
    }

    const std::string marker = ds.answer_marker;
    std::string text;
    std::size_t answer_char = std::string::npos;

    if (coin(server_seed, "garbage:" + req.prompt) < kGarbageRate) {
        text = "I am not sure this example can be completed in the requested format.";
    } else {
        const int v = query.verbosity;
        std::vector<std::string> mentioned;
        for (const auto& word : words) {
            const bool is_salient =
                std::find(salient.begin(), salient.end(), word) != salient.end();
            const double rate = is_salient ? kSalientMentionRate[static_cast<std::size_t>(v)]
                                           : kOtherMentionRate[static_cast<std::size_t>(v)];
            const std::string tag = "mention:" + ds.id + ":" + word + ":" +
                                    std::to_string(v) + ":" + joined;
            if (coin(server_seed, tag) < rate) mentioned.push_back(word);
        }
        std::stable_partition(mentioned.begin(), mentioned.end(), [&](const std::string& w) {
            return std::find(salient.begin(), salient.end(), w) != salient.end();
        });

        std::string expl;
        if (mentioned.empty()) {
            expl = "No single cue settles it, but the overall phrasing points this way.";
        } else {
            expl = "The decisive cues are " + join(mentioned, ", ") + ".";
        }
        if (v >= 3) expl += " Taken together these details make the label clear.";
        if (v == 4) expl += " Weighing each option carefully confirms this choice.";

        if (!query.instructed && !query.explain_first) {
            text = " ";
            answer_char = text.size();
            text += label + "\nEXPLANATION: " + expl;
        } else if (!query.instructed && query.explain_first) {
            text = " " + expl + "\n" + marker + ": ";
            answer_char = text.size();
            text += label;
        } else if (query.explain_first) {
            text = "EXPLANATION: " + expl + "\n" + marker + ": ";
            answer_char = text.size();
            text += label;
        } else {
            text = marker + ": ";
            answer_char = text.size();
            text += label + "\nEXPLANATION: " + expl;
        }
    }

    std::vector<TokenEntry> tokens;
    bool truncated = false;
    if (req.logprobs) {
        const auto pieces = tokenize_completion(text);
        std::size_t offset = 0;
        for (const auto& piece : pieces) {
            TokenEntry entry;
            entry.token = piece;
            const bool is_answer = answer_char != std::string::npos &&
                                   answer_char >= offset && answer_char < offset + piece.size();
            if (is_answer) {
                const std::string prefix = piece.front() == ' ' ? " " : "";
                std::vector<std::pair<std::string, double>> top;
                for (std::size_t i = 0; i < n_labels; ++i) {
                    top.emplace_back(prefix + ds.labels[i], std::log(probs[i]));
                }
                std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
                    return a.second > b.second;
                });
                top.emplace_back(prefix + "perhaps", std::log(0.0005));
                entry.top = std::move(top);
                entry.logprob = std::log(probs[label_index]);
            } else {
                entry.logprob = std::log(0.98);
                entry.top = {{entry.token, entry.logprob}, {" well", std::log(0.01)}};
            }
            offset += piece.size();
            tokens.push_back(std::move(entry));
        }
        if (tokens.size() > req.max_tokens) {
            tokens.resize(req.max_tokens);
            text.clear();
            for (const auto& entry : tokens) text += entry.token;
            truncated = true;
        }
    }

    return render_response(request_body, req, text, std::move(tokens), truncated).dump();
}

}  // namespace

std::string mock_response_body(const std::string& request_body, std::uint64_t server_seed) {
    const MockRequest req = parse_request(request_body);
    if (req.prompt.find("Does the second sentence make sense with the added word?") !=
        std::string::npos) {
        return naturalness_response(request_body, req, server_seed);
    }
    return task_response(request_body, req, server_seed);
}

struct MockServer::Impl {
    std::uint64_t seed;
    httplib::Server server;
    std::thread thread;
    int port = 0;
};

MockServer::MockServer(std::uint64_t seed) : impl_(std::make_unique<Impl>()) {
    impl_->seed = seed;
}

MockServer::~MockServer() { stop(); }

int MockServer::start(int port) {
    const std::uint64_t seed = impl_->seed;
    impl_->server.Post("/v1/chat/completions",
                       [seed](const httplib::Request& req, httplib::Response& res) {
                           try {
                               res.set_content(mock_response_body(req.body, seed),
                                               "application/json");
                           } catch (const std::exception& e) {
                               res.status = 400;
                               res.set_content(
                                   nlohmann::json{{"error", e.what()}}.dump(),
                                   "application/json");
                           }
                       });
    impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
        if (impl_->port <= 0) throw StructuralError("mock server could not bind a port");
    } else {
        if (!impl_->server.bind_to_port("127.0.0.1", port)) {
            throw StructuralError("mock server could not bind port " + std::to_string(port));
        }
        impl_->port = port;
    }
    impl_->thread = std::thread([this]() { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void MockServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
    if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

int MockServer::port() const { return impl_->port; }

std::string MockServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(impl_->port);
}

}  // namespace faithkit
