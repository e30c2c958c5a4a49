#include "affchan/cache.hpp"

#include <fstream>
#include <sstream>

#include "affchan/common.hpp"

namespace affchan {

namespace fs = std::filesystem;

std::uint64_t file_fingerprint(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingDataError("fingerprint: cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

StageCache::StageCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

fs::path StageCache::stamp_path(const std::string& stage) const {
    return dir_ / (stage + ".stamp");
}

bool StageCache::is_fresh(const std::string& stage, std::uint64_t fingerprint) const {
    std::ifstream in(stamp_path(stage));
    if (!in) return false;
    std::string stored;
    std::getline(in, stored);
    return stored == std::to_string(fingerprint);
}

void StageCache::mark_done(const std::string& stage, std::uint64_t fingerprint) const {
    fs::create_directories(dir_);
    fs::path tmp = stamp_path(stage);
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cache: cannot write " + tmp.string());
        out << fingerprint << "\n";
    }
    fs::rename(tmp, stamp_path(stage));
}

void StageCache::invalidate(const std::string& stage) const {
    std::error_code ec;
    fs::remove(stamp_path(stage), ec);
}

}  // namespace affchan
