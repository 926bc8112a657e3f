#pragma once

#include <string>
#include <vector>

namespace faithkit {

struct TopCandidate {
    std::string token;
    double logprob = 0.0;
};

struct TokenInfo {
    std::string token;
    double logprob = 0.0;
    std::vector<TopCandidate> top;
};

// One model completion, transport-agnostic: the generated text plus whatever
// token-level candidate information the endpoint exposed.
struct Completion {
    std::string text;
    std::vector<TokenInfo> tokens;
    std::vector<std::string> flags;
};

}  // namespace faithkit
