#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace faithkit {

std::string sha256_hex(std::string_view data);

// Content-addressed store for raw response bodies: key -> <dir>/<k[0:2]>/<k>.json.
// Writes go through a temp file and an atomic rename, so concurrent readers
// only ever see complete entries and duplicate writers are harmless.
class ResponseCache {
  public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, std::string_view body) const;
    std::filesystem::path path_for(const std::string& key) const;
    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
};

}  // namespace faithkit
