#include "affchan/detector.hpp"

#include <fstream>

#include <json.hpp>

#include "affchan/common.hpp"

namespace affchan {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void check_detection(const Detection& d, const std::string& where) {
    if (d.class_id < 0 || d.class_id >= kNumObjectClasses)
        throw ValidationError(where + ": class_id " + std::to_string(d.class_id) +
                              " outside [0, " + std::to_string(kNumObjectClasses - 1) + "]");
    if (d.confidence < 0.0 || d.confidence > 1.0)
        throw ValidationError(where + ": confidence outside [0, 1]");
}

}  // namespace

DetectionSidecar load_detection_sidecar(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw MissingSidecarError("detection sidecar missing: " + path.string());
    json root;
    try {
        root = json::parse(f);
    } catch (const json::exception& e) {
        throw ParseError("detection sidecar " + path.string() + ": " + e.what());
    }
    DetectionSidecar sc;
    if (!root.is_object() || !root.contains("video_id") || !root.contains("frames"))
        throw ParseError("detection sidecar " + path.string() +
                         ": expected {video_id, frames}");
    sc.video_id = root["video_id"].get<std::string>();
    for (const auto& jf : root["frames"]) {
        SidecarFrameEntry e;
        e.frame_index = jf.at("frame_index").get<int>();
        e.blur_level = jf.at("blur_level").get<int>();
        if (e.blur_level < 0)
            throw ValidationError("detection sidecar " + path.string() + ": blur_level < 0");
        for (const auto& jd : jf.value("detections", json::array())) {
            Detection d;
            d.class_id = jd.at("class_id").get<int>();
            d.x = jd.at("x").get<double>();
            d.y = jd.at("y").get<double>();
            d.w = jd.at("w").get<double>();
            d.h = jd.at("h").get<double>();
            d.confidence = jd.at("confidence").get<double>();
            check_detection(d, path.string());
            e.detections.push_back(d);
        }
        sc.frames.push_back(std::move(e));
    }
    return sc;
}

void save_detection_sidecar(const DetectionSidecar& sc, const fs::path& path) {
    json root;
    root["video_id"] = sc.video_id;
    root["frames"] = json::array();
    for (const auto& e : sc.frames) {
        json jf;
        jf["frame_index"] = e.frame_index;
        jf["blur_level"] = e.blur_level;
        jf["detections"] = json::array();
        for (const auto& d : e.detections) {
            json jd;
            jd["class_id"] = d.class_id;
            jd["x"] = d.x;
            jd["y"] = d.y;
            jd["w"] = d.w;
            jd["h"] = d.h;
            jd["confidence"] = d.confidence;
            jf["detections"].push_back(std::move(jd));
        }
        root["frames"].push_back(std::move(jf));
    }
    std::ofstream f(path);
    if (!f) throw Error("cannot write detection sidecar: " + path.string());
    f << root.dump(2) << "\n";
}

Detector::Detector(double confidence_threshold) : thr_(confidence_threshold) {
    if (!(thr_ > 0.0 && thr_ < 1.0))
        throw ValidationError("confidence threshold must lie in (0, 1)");
}

std::vector<Detection> Detector::detect(const std::string& video_id, int frame_index,
                                        int blur_level) const {
    std::vector<Detection> out;
    for (const auto& d : raw(video_id, frame_index, blur_level))
        if (d.confidence > thr_) out.push_back(d);
    return out;
}

FileBackedDetector::FileBackedDetector(fs::path detections_dir, double confidence_threshold)
    : Detector(confidence_threshold), dir_(std::move(detections_dir)) {}

const DetectionSidecar& FileBackedDetector::sidecar(const std::string& video_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(video_id);
    if (it != cache_.end()) return it->second;
    DetectionSidecar sc = load_detection_sidecar(dir_ / (video_id + ".json"));
    if (sc.video_id != video_id)
        throw IntegrityError("detection sidecar for " + video_id + " declares video_id " +
                             sc.video_id);
    return cache_.emplace(video_id, std::move(sc)).first->second;
}

std::vector<Detection> FileBackedDetector::raw(const std::string& video_id, int frame_index,
                                               int blur_level) const {
    const DetectionSidecar& sc = sidecar(video_id);
    for (const auto& e : sc.frames)
        if (e.frame_index == frame_index && e.blur_level == blur_level) return e.detections;
    throw MissingSidecarError("no detection entry for (" + video_id + ", " +
                              std::to_string(frame_index) + ", " + std::to_string(blur_level) +
                              ")");
}

ScriptedDetector::ScriptedDetector(std::map<int, std::vector<Detection>> rule,
                                   double confidence_threshold)
    : Detector(confidence_threshold), rule_(std::move(rule)) {}

std::vector<Detection> ScriptedDetector::raw(const std::string&, int, int blur_level) const {
    auto it = rule_.find(blur_level);
    if (it == rule_.end())
        throw MissingSidecarError("scripted rule undefined for blur level " +
                                  std::to_string(blur_level));
    return it->second;
}

}  // namespace affchan
