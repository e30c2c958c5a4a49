#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "affchan/types.hpp"

namespace affchan {

inline constexpr double kDefaultConfidenceThreshold = 0.25;
inline constexpr int kNumObjectClasses = 80;

struct SidecarFrameEntry {
    int frame_index = 0;
    int blur_level = 0;
    std::vector<Detection> detections;
};

struct DetectionSidecar {
    std::string video_id;
    std::vector<SidecarFrameEntry> frames;
};

DetectionSidecar load_detection_sidecar(const std::filesystem::path& path);
void save_detection_sidecar(const DetectionSidecar& sc, const std::filesystem::path& path);

// Detections are consumed, never computed: any external detector writes them
// into sidecar files keyed by (frame_index, blur_level), and this boundary
// replays them. detect() keeps only detections with confidence strictly above
// the threshold; a present-but-empty list is data, an absent key is an error.
class Detector {
public:
    explicit Detector(double confidence_threshold = kDefaultConfidenceThreshold);
    virtual ~Detector() = default;

    double confidence_threshold() const { return thr_; }

    std::vector<Detection> detect(const std::string& video_id, int frame_index,
                                  int blur_level) const;

protected:
    virtual std::vector<Detection> raw(const std::string& video_id, int frame_index,
                                       int blur_level) const = 0;

private:
    double thr_;
};

// Replays detection sidecars from a directory (<video_id>.json), loaded lazily.
class FileBackedDetector : public Detector {
public:
    explicit FileBackedDetector(std::filesystem::path detections_dir,
                                double confidence_threshold = kDefaultConfidenceThreshold);

protected:
    std::vector<Detection> raw(const std::string& video_id, int frame_index,
                               int blur_level) const override;

private:
    const DetectionSidecar& sidecar(const std::string& video_id) const;

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    mutable std::map<std::string, DetectionSidecar> cache_;
};

// Test double: answers from a fixed blur_level -> detections rule,
// independent of video and frame.
class ScriptedDetector : public Detector {
public:
    explicit ScriptedDetector(std::map<int, std::vector<Detection>> rule,
                              double confidence_threshold = kDefaultConfidenceThreshold);

protected:
    std::vector<Detection> raw(const std::string& video_id, int frame_index,
                               int blur_level) const override;

private:
    std::map<int, std::vector<Detection>> rule_;
};

}  // namespace affchan
