#include "affchan/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "affchan/common.hpp"

namespace affchan {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const json& field(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key))
        throw ParseError("manifest: missing field " + where + "." + key);
    return obj.at(key);
}

std::string str_field(const json& obj, const std::string& key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_string()) throw ParseError("manifest: " + where + "." + key + " must be a string");
    return v.get<std::string>();
}

double num_field(const json& obj, const std::string& key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_number()) throw ParseError("manifest: " + where + "." + key + " must be a number");
    return v.get<double>();
}

ExpertLabel label_field(const json& obj, const std::string& key, const std::string& where) {
    std::string s = str_field(obj, key, where);
    if (s == "High") return ExpertLabel::High;
    if (s == "Low") return ExpertLabel::Low;
    throw ParseError("manifest: " + where + "." + key + " must be \"High\" or \"Low\"");
}

fs::path resolve(const std::string& p, const fs::path& base) {
    fs::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

std::vector<std::vector<std::optional<int>>> parse_grid(const json& g, const std::string& name,
                                                        std::size_t n_raters,
                                                        std::size_t n_items, int lo, int hi) {
    if (!g.is_array() || g.size() != n_raters)
        throw ParseError("manifest: ratings." + name + " must have one row per rater");
    std::vector<std::vector<std::optional<int>>> out(n_raters);
    for (std::size_t r = 0; r < n_raters; ++r) {
        const json& row = g[r];
        std::string where = "ratings." + name + "[" + std::to_string(r) + "]";
        if (!row.is_array() || row.size() != n_items)
            throw ParseError("manifest: " + where + " must have one cell per item");
        out[r].resize(n_items);
        for (std::size_t i = 0; i < n_items; ++i) {
            const json& cell = row[i];
            if (cell.is_null()) continue;
            if (!cell.is_number_integer())
                throw ParseError("manifest: " + where + "[" + std::to_string(i) +
                                 "] must be an integer or null");
            int v = cell.get<int>();
            if (v < lo || v > hi)
                throw ValidationError("manifest: " + where + "[" + std::to_string(i) + "] = " +
                                      std::to_string(v) + " outside scale [" +
                                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
            out[r][i] = v;
        }
    }
    return out;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& json_text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ParseError("manifest: top level must be an object");

    DatasetManifest m;

    const json& videos = field(root, "videos", "$");
    if (!videos.is_array()) throw ParseError("manifest: videos must be an array");
    for (std::size_t i = 0; i < videos.size(); ++i) {
        std::string where = "videos[" + std::to_string(i) + "]";
        const json& jv = videos[i];
        VideoRecord v;
        v.id = str_field(jv, "id", where);
        v.duration_s = num_field(jv, "duration_s", where);
        if (!(v.duration_s > 0.0))
            throw ValidationError("manifest: " + where + ".duration_s must be > 0");
        v.frame_width = int(num_field(jv, "frame_width", where));
        v.frame_height = int(num_field(jv, "frame_height", where));
        if (v.frame_width < 1 || v.frame_height < 1)
            throw ValidationError("manifest: " + where + " frame dimensions must be >= 1");
        v.frame_dir = resolve(str_field(jv, "frame_dir", where), base_dir);
        v.expert_valence = label_field(jv, "expert_valence", where);
        v.expert_arousal = label_field(jv, "expert_arousal", where);
        if (m.find_video(v.id))
            throw IntegrityError("manifest: duplicate video id: " + v.id);
        m.videos.push_back(std::move(v));
    }

    if (root.contains("ratings") && !root["ratings"].is_null()) {
        const json& jr = root["ratings"];
        const json& raters = field(jr, "raters", "ratings");
        const json& items = field(jr, "items", "ratings");
        if (!raters.is_array() || !items.is_array())
            throw ParseError("manifest: ratings.raters and ratings.items must be arrays");
        for (const auto& r : raters) {
            if (!r.is_string()) throw ParseError("manifest: ratings.raters entries must be strings");
            m.ratings.raters.push_back(r.get<std::string>());
        }
        for (const auto& it : items) {
            if (!it.is_string()) throw ParseError("manifest: ratings.items entries must be strings");
            m.ratings.items.push_back(it.get<std::string>());
        }
        m.ratings.valence = parse_grid(field(jr, "valence", "ratings"), "valence",
                                       m.ratings.n_raters(), m.ratings.n_items(), -2, 2);
        m.ratings.arousal = parse_grid(field(jr, "arousal", "ratings"), "arousal",
                                       m.ratings.n_raters(), m.ratings.n_items(), 0, 4);
    }

    if (root.contains("gaze") && !root["gaze"].is_null()) {
        const json& jg = root["gaze"];
        if (!jg.is_array()) throw ParseError("manifest: gaze must be an array");
        for (std::size_t i = 0; i < jg.size(); ++i) {
            std::string where = "gaze[" + std::to_string(i) + "]";
            GazeIndexEntry e;
            e.rater_id = str_field(jg[i], "rater_id", where);
            e.video_id = str_field(jg[i], "video_id", where);
            e.path = resolve(str_field(jg[i], "path", where), base_dir);
            if (!m.find_video(e.video_id))
                throw IntegrityError("manifest: " + where + " references unknown video " +
                                     e.video_id);
            m.gaze.push_back(std::move(e));
        }
    }

    if (root.contains("sidecars") && !root["sidecars"].is_null()) {
        const json& js = root["sidecars"];
        if (js.contains("detections_dir"))
            m.sidecars.detections_dir =
                resolve(str_field(js, "detections_dir", "sidecars"), base_dir);
        if (js.contains("features_dir"))
            m.sidecars.features_dir = resolve(str_field(js, "features_dir", "sidecars"), base_dir);
    }

    return m;
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw MissingDataError("manifest: cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_manifest(ss.str(), path.parent_path());
}

std::string serialize_manifest(const DatasetManifest& m) {
    json root;
    root["videos"] = json::array();
    for (const auto& v : m.videos) {
        json jv;
        jv["id"] = v.id;
        jv["duration_s"] = v.duration_s;
        jv["frame_width"] = v.frame_width;
        jv["frame_height"] = v.frame_height;
        jv["frame_dir"] = v.frame_dir.string();
        jv["expert_valence"] = v.expert_valence == ExpertLabel::High ? "High" : "Low";
        jv["expert_arousal"] = v.expert_arousal == ExpertLabel::High ? "High" : "Low";
        root["videos"].push_back(std::move(jv));
    }
    json jr;
    jr["raters"] = m.ratings.raters;
    jr["items"] = m.ratings.items;
    auto grid_json = [](const std::vector<std::vector<std::optional<int>>>& g) {
        json out = json::array();
        for (const auto& row : g) {
            json jrow = json::array();
            for (const auto& cell : row) {
                if (cell)
                    jrow.push_back(*cell);
                else
                    jrow.push_back(nullptr);
            }
            out.push_back(std::move(jrow));
        }
        return out;
    };
    jr["valence"] = grid_json(m.ratings.valence);
    jr["arousal"] = grid_json(m.ratings.arousal);
    root["ratings"] = std::move(jr);
    root["gaze"] = json::array();
    for (const auto& e : m.gaze) {
        json je;
        je["rater_id"] = e.rater_id;
        je["video_id"] = e.video_id;
        je["path"] = e.path.string();
        root["gaze"].push_back(std::move(je));
    }
    json js;
    js["detections_dir"] = m.sidecars.detections_dir.string();
    js["features_dir"] = m.sidecars.features_dir.string();
    root["sidecars"] = std::move(js);
    return root.dump(2) + "\n";
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw Error("manifest: cannot write " + path.string());
    f << serialize_manifest(m);
}

}  // namespace affchan
