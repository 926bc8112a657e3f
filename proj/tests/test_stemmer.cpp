#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "faithkit/stemmer.hpp"

using faithkit::snowball_stem;

TEST_CASE("matches the full oracle fixture") {
    std::ifstream in(std::string(FAITHKIT_FIXTURE_DIR) + "/stemmer_oracle.tsv");
    REQUIRE(in.good());
    std::string line;
    int checked = 0;
    std::vector<std::string> failures;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        REQUIRE(tab != std::string::npos);
        std::string word = line.substr(0, tab);
        std::string want = line.substr(tab + 1);
        std::string got = snowball_stem(word);
        if (got != want) failures.push_back(word + " -> " + got + " (want " + want + ")");
        ++checked;
    }
    CHECK(checked > 3000);
    if (!failures.empty()) {
        std::ostringstream msg;
        msg << failures.size() << " mismatches, first few:";
        for (std::size_t i = 0; i < failures.size() && i < 10; ++i) msg << "\n  " << failures[i];
        FAIL_CHECK(msg.str());
    }
}

TEST_CASE("inflections of the same lemma share a stem") {
    CHECK(snowball_stem("exults") == snowball_stem("exulted"));
    CHECK(snowball_stem("exults") == snowball_stem("exulting"));
    CHECK(snowball_stem("running") == snowball_stem("runs"));
    CHECK(snowball_stem("cries") == snowball_stem("crying"));
}

TEST_CASE("input is case-insensitive") {
    CHECK(snowball_stem("Exulted") == snowball_stem("exulted"));
    CHECK(snowball_stem("FINNISH") == snowball_stem("finnish"));
}

TEST_CASE("short and exceptional words pass through") {
    CHECK(snowball_stem("a") == "a");
    CHECK(snowball_stem("ox") == "ox");
    CHECK(snowball_stem("news") == "news");
    CHECK(snowball_stem("sky") == "sky");
    CHECK(snowball_stem("dying") == "die");
    CHECK(snowball_stem("proceed") == "proceed");
}
