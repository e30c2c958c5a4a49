#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace affchan {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Content hash of a file's bytes; missing file is an error.
std::uint64_t file_fingerprint(const std::filesystem::path& p);

// Marker-file cache. Each stage stamps a fingerprint of everything it
// depends on (inputs + the config subset it reads); an equal stamp on a later
// run means the stage's artifacts are already current and it can be skipped.
class StageCache {
  public:
    explicit StageCache(std::filesystem::path dir);

    bool is_fresh(const std::string& stage, std::uint64_t fingerprint) const;
    void mark_done(const std::string& stage, std::uint64_t fingerprint) const;
    void invalidate(const std::string& stage) const;

  private:
    std::filesystem::path stamp_path(const std::string& stage) const;

    std::filesystem::path dir_;
};

}  // namespace affchan
