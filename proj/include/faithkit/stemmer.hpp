#pragma once

#include <string>
#include <string_view>

namespace faithkit {

// English Snowball (Porter2) stemmer. The input is ASCII-lowercased first;
// non-ASCII bytes pass through untouched. Frozen against an oracle fixture of
// word/stem pairs in tests/fixtures/stemmer_oracle.tsv.
std::string snowball_stem(std::string_view word);

}  // namespace faithkit
