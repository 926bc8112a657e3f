#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace faithkit {

// Chat-completions response for a request body, as a pure function of the
// body bytes and the server seed. Malformed bodies raise StructuralError.
std::string mock_response_body(const std::string& request_body, std::uint64_t server_seed);

// In-process HTTP wrapper around mock_response_body, for tests and the
// bundled mock server binary.
class MockServer {
  public:
    explicit MockServer(std::uint64_t seed);
    ~MockServer();
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    // Binds 127.0.0.1 (port 0 picks a free one), serves on a background
    // thread, and returns the bound port.
    int start(int port = 0);
    void stop();
    int port() const;
    std::string base_url() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace faithkit
