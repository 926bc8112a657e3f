#include "faithkit/cache.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include "faithkit/errors.hpp"

namespace faithkit {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw StructuralError("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
    if (key.size() < 3) throw StructuralError("cache key too short");
    return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
}

void ResponseCache::put(const std::string& key, std::string_view body) const {
    static std::atomic<unsigned long long> counter{0};
    const auto target = path_for(key);
    std::filesystem::create_directories(target.parent_path());
    const auto tmp = target.parent_path() /
                     (key + ".tmp." + std::to_string(counter.fetch_add(1)) + "." +
                      std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StructuralError("cannot write cache entry " + tmp.string());
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!out) throw StructuralError("short write to cache entry " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw StructuralError("cannot publish cache entry " + target.string() + ": " +
                              ec.message());
    }
}

}  // namespace faithkit
