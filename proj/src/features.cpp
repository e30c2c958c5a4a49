#include "affchan/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "affchan/common.hpp"
#include "affchan/frames.hpp"

namespace affchan {

using json = nlohmann::ordered_json;

namespace fs = std::filesystem;

std::filesystem::path feature_table_path(const std::filesystem::path& dir,
                                         ChannelKind channel, const std::string& video_id) {
    return dir / channel_slug(channel) / (video_id + ".fv");
}

namespace {

void check_table(const FeatureTable& t) {
    if (t.rows.size() != t.frame_index.size())
        throw ContractError("feature table: frame-index column length mismatch");
    for (const auto& r : t.rows)
        if (r.size() != t.dim)
            throw ContractError("feature table: row width differs from declared dim");
}

void write_exact(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), std::streamsize(n));
}

fs::path idx_path(const fs::path& table) {
    fs::path p = table;
    p.replace_extension(".idx");
    return p;
}

}  // namespace

void save_feature_table(const FeatureTable& t, const std::filesystem::path& path) {
    check_table(t);
    fs::create_directories(path.parent_path());

    json header;
    header["channel"] = channel_slug(t.channel);
    header["video_id"] = t.video_id;
    header["dim"] = t.dim;
    header["n_rows"] = t.n_rows();
    std::string hs = header.dump();

    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("feature table: cannot write " + tmp.string());
        write_exact(out, "AFV1", 4);
        std::uint32_t len = std::uint32_t(hs.size());
        unsigned char lb[4] = {static_cast<unsigned char>(len & 0xff),
                               static_cast<unsigned char>((len >> 8) & 0xff),
                               static_cast<unsigned char>((len >> 16) & 0xff),
                               static_cast<unsigned char>((len >> 24) & 0xff)};
        write_exact(out, lb, 4);
        write_exact(out, hs.data(), hs.size());
        for (const auto& row : t.rows) {
            if constexpr (std::endian::native == std::endian::little) {
                write_exact(out, row.data(), row.size() * sizeof(float));
            } else {
                for (float v : row) {
                    auto u = std::bit_cast<std::uint32_t>(v);
                    unsigned char b[4] = {static_cast<unsigned char>(u & 0xff),
                                          static_cast<unsigned char>((u >> 8) & 0xff),
                                          static_cast<unsigned char>((u >> 16) & 0xff),
                                          static_cast<unsigned char>((u >> 24) & 0xff)};
                    write_exact(out, b, 4);
                }
            }
        }
        if (!out) throw Error("feature table: write failed for " + tmp.string());
    }
    fs::path itmp = idx_path(path);
    itmp += ".tmp";
    {
        std::ofstream out(itmp);
        if (!out) throw Error("feature table: cannot write " + itmp.string());
        for (int fi : t.frame_index) out << fi << "\n";
        if (!out) throw Error("feature table: write failed for " + itmp.string());
    }
    fs::rename(tmp, path);
    fs::rename(itmp, idx_path(path));
}

FeatureTable load_feature_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingSidecarError("feature table missing: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || bytes.compare(0, 4, "AFV1") != 0)
        throw ParseError("feature table " + path.string() + ": bad magic");
    auto u8 = [&](std::size_t i) { return std::uint32_t(static_cast<unsigned char>(bytes[i])); };
    std::uint32_t hlen = u8(4) | (u8(5) << 8) | (u8(6) << 16) | (u8(7) << 24);
    if (bytes.size() < 8 + std::size_t(hlen))
        throw ParseError("feature table " + path.string() + ": truncated header");

    json header;
    try {
        header = json::parse(bytes.substr(8, hlen));
    } catch (const json::exception& e) {
        throw ParseError("feature table " + path.string() + ": " + e.what());
    }
    FeatureTable t;
    t.channel = channel_from_slug(header.at("channel").get<std::string>());
    t.video_id = header.at("video_id").get<std::string>();
    t.dim = header.at("dim").get<std::size_t>();
    std::size_t n_rows = header.at("n_rows").get<std::size_t>();

    std::size_t need = 8 + hlen + n_rows * t.dim * sizeof(float);
    if (bytes.size() != need)
        throw IntegrityError("feature table " + path.string() + ": payload size " +
                             std::to_string(bytes.size() - 8 - hlen) + " does not match header");
    const char* p = bytes.data() + 8 + hlen;
    t.rows.assign(n_rows, std::vector<float>(t.dim));
    for (auto& row : t.rows) {
        if constexpr (std::endian::native == std::endian::little) {
            std::memcpy(row.data(), p, t.dim * sizeof(float));
            p += t.dim * sizeof(float);
        } else {
            for (std::size_t j = 0; j < t.dim; ++j, p += 4) {
                std::uint32_t u = std::uint32_t(static_cast<unsigned char>(p[0])) |
                                  (std::uint32_t(static_cast<unsigned char>(p[1])) << 8) |
                                  (std::uint32_t(static_cast<unsigned char>(p[2])) << 16) |
                                  (std::uint32_t(static_cast<unsigned char>(p[3])) << 24);
                row[j] = std::bit_cast<float>(u);
            }
        }
    }

    std::ifstream idx(idx_path(path));
    if (!idx)
        throw MissingSidecarError("feature table index missing: " + idx_path(path).string());
    std::string line;
    while (std::getline(idx, line)) {
        if (line.empty()) continue;
        try {
            t.frame_index.push_back(std::stoi(line));
        } catch (const std::exception&) {
            throw ParseError("feature table index " + idx_path(path).string() +
                             ": bad line \"" + line + "\"");
        }
    }
    if (t.frame_index.size() != n_rows)
        throw IntegrityError("feature table " + path.string() + ": index has " +
                             std::to_string(t.frame_index.size()) + " rows, table has " +
                             std::to_string(n_rows));
    return t;
}

FeatureTable load_feature_table_csv(const std::filesystem::path& path, ChannelKind channel,
                                    const std::string& video_id) {
    std::ifstream in(path);
    if (!in) throw MissingSidecarError("feature table missing: " + path.string());
    FeatureTable t;
    t.channel = channel;
    t.video_id = video_id;

    std::string line;
    if (!std::getline(in, line) || line.rfind("frame_index", 0) != 0)
        throw ParseError("feature csv " + path.string() + ": missing frame_index header");
    while (std::getline(in, line)) {
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ','))
            throw ParseError("feature csv " + path.string() + ": bad row \"" + line + "\"");
        std::vector<float> row;
        int fi = 0;
        try {
            fi = std::stoi(cell);
            while (std::getline(ss, cell, ',')) row.push_back(std::stof(cell));
        } catch (const std::exception&) {
            throw ParseError("feature csv " + path.string() + ": bad row \"" + line + "\"");
        }
        if (t.rows.empty()) t.dim = row.size();
        if (row.size() != t.dim)
            throw ParseError("feature csv " + path.string() + ": ragged row widths");
        t.frame_index.push_back(fi);
        t.rows.push_back(std::move(row));
    }
    return t;
}

FeatureStore::FeatureStore(std::vector<std::filesystem::path> search_dirs)
    : dirs_(std::move(search_dirs)) {}

std::optional<FeatureTable> FeatureStore::try_load(ChannelKind channel,
                                                   const std::string& video_id) const {
    for (const auto& dir : dirs_) {
        fs::path bin = feature_table_path(dir, channel, video_id);
        fs::path csv = bin;
        csv.replace_extension(".csv");
        FeatureTable t;
        if (fs::exists(bin)) t = load_feature_table(bin);
        else if (fs::exists(csv)) t = load_feature_table_csv(csv, channel, video_id);
        else continue;
        if (t.channel != channel || t.video_id != video_id)
            throw IntegrityError("feature table " + bin.string() +
                                 ": header names a different channel or video");
        return t;
    }
    return std::nullopt;
}

FeatureTable FeatureStore::load(ChannelKind channel, const std::string& video_id) const {
    auto t = try_load(channel, video_id);
    if (!t)
        throw MissingSidecarError("no feature table for channel " + channel_slug(channel) +
                                  ", video " + video_id);
    return *std::move(t);
}

std::string frame_key(const std::string& video_id, int frame_index) {
    return video_id + "#" + std::to_string(frame_index);
}

DeepFeatureLoad load_deep_features(const DatasetManifest& manifest,
                                   const std::filesystem::path& sidecar_dir,
                                   ChannelKind channel) {
    FeatureStore store({sidecar_dir});
    std::size_t want = channel == ChannelKind::Fc8 ? kFc8Dim : kFc7Dim;
    DeepFeatureLoad out;
    for (const auto& v : manifest.videos) {
        int n = frame_count_for_duration(v.duration_s);
        auto t = store.try_load(channel, v.id);
        if (!t) {
            for (int i = 0; i < n; ++i) out.missing.push_back(frame_key(v.id, i));
            continue;
        }
        if (t->dim != want)
            throw ParseError("deep features " + channel_slug(channel) + "/" + v.id + ": dim " +
                             std::to_string(t->dim) + ", expected " + std::to_string(want));
        std::map<int, std::size_t> by_frame;
        for (std::size_t r = 0; r < t->n_rows(); ++r) {
            int fi = t->frame_index[r];
            if (fi < 0 || fi >= n)
                throw IntegrityError("deep features " + v.id + ": frame index " +
                                     std::to_string(fi) + " outside [0, " + std::to_string(n) + ")");
            if (!by_frame.emplace(fi, r).second)
                throw IntegrityError("deep features " + v.id + ": duplicate frame index " +
                                     std::to_string(fi));
            if (channel == ChannelKind::Fc8) {
                double sum = 0.0;
                for (float x : t->rows[r]) {
                    if (!(x >= 0.0f && x <= 1.0f))
                        throw ValidationError("fc8 features " + v.id + " frame " +
                                              std::to_string(fi) + ": entry outside [0,1]");
                    sum += x;
                }
                if (std::abs(sum - 1.0) > 1e-3)
                    throw ValidationError("fc8 features " + v.id + " frame " +
                                          std::to_string(fi) + ": sum " + std::to_string(sum) +
                                          " is not 1 within 1e-3");
            }
        }
        for (int i = 0; i < n; ++i) {
            auto it = by_frame.find(i);
            if (it == by_frame.end()) {
                out.missing.push_back(frame_key(v.id, i));
                continue;
            }
            FeatureVector fv;
            fv.channel = channel;
            fv.values.assign(t->rows[it->second].begin(), t->rows[it->second].end());
            out.by_key.emplace(frame_key(v.id, i), std::move(fv));
        }
    }
    return out;
}

namespace {
const std::vector<std::string> kWindowNames = {"all", "l30", "l10"};
}

const std::string& window_name(Window w) { return kWindowNames[std::size_t(w)]; }

Window window_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kWindowNames.size(); ++i)
        if (kWindowNames[i] == name) return Window(i);
    throw ValidationError("unknown window '" + name + "'");
}

const std::vector<Window>& all_windows() {
    static const std::vector<Window> w = {Window::All, Window::L30, Window::L10};
    return w;
}

DesignMatrix assemble_design_matrix(const DatasetManifest& manifest, const FeatureStore& store,
                                    ChannelKind channel, Window window, AffectTask task,
                                    std::vector<std::string>* warnings) {
    if (manifest.videos.empty()) throw EmptyDesignError("design matrix: manifest has no videos");

    double tail = window == Window::L30 ? 30.0 : 10.0;
    bool video_scoped = !channel_is_frame_scoped(channel);
    if (video_scoped && window != Window::All && warnings)
        warnings->push_back(channel_slug(channel) + ": video-scoped channel, window " +
                            window_name(window) + " ignored");

    DesignMatrix d;
    for (const auto& v : manifest.videos) {
        FeatureTable t = store.load(channel, v.id);
        if (d.dim == 0) d.dim = t.dim;
        else if (t.dim != d.dim)
            throw IntegrityError("design matrix: " + channel_slug(channel) + "/" + v.id +
                                 " has dim " + std::to_string(t.dim) + ", expected " +
                                 std::to_string(d.dim));
        ExpertLabel lab =
            task.dimension == AffectDim::Valence ? v.expert_valence : v.expert_arousal;
        int y = lab == ExpertLabel::High ? 1 : -1;

        for (std::size_t r = 0; r < t.n_rows(); ++r) {
            int fi = t.frame_index[r];
            if (video_scoped) {
                if (fi != -1)
                    throw IntegrityError("design matrix: " + channel_slug(channel) + "/" + v.id +
                                         " should be video-scoped (frame index -1)");
            } else {
                if (fi < 0)
                    throw IntegrityError("design matrix: " + channel_slug(channel) + "/" + v.id +
                                         " has a video-scoped row in a frame-scoped channel");
                double ts = kFrameStepS * fi;
                if (window != Window::All && ts < v.duration_s - tail) continue;
            }
            d.X.emplace_back(t.rows[r].begin(), t.rows[r].end());
            d.y.push_back(y);
            d.groups.push_back(v.id);
        }
    }
    if (d.X.empty())
        throw EmptyDesignError("design matrix: " + channel_slug(channel) + " window " +
                               window_name(window) + " selects no rows");
    return d;
}

}  // namespace affchan
