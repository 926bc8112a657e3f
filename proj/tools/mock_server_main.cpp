#include <chrono>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "faithkit/mock_model.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic OpenAI-compatible mock model server"};
    int port = 8080;
    std::uint64_t seed = 0;
    app.add_option("--port", port, "Port to listen on (0 picks a free port)")
        ->check(CLI::Range(0, 65535));
    app.add_option("--seed", seed, "Server seed controlling all responses");
    CLI11_PARSE(app, argc, argv);

    try {
        faithkit::MockServer server(seed);
        const int bound = server.start(port);
        std::cout << "mock model listening on " << server.base_url()
                  << " (seed " << seed << ")" << std::endl;
        (void)bound;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        while (g_stop == 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        server.stop();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
