#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "affchan/image.hpp"

namespace affchan {

// Display used during gaze collection; traces and heatmaps live in this space.
inline constexpr int kScreenW = 1366;
inline constexpr int kScreenH = 768;

// Frame sampling cadence: one frame every three seconds.
inline constexpr double kFrameStepS = 3.0;

enum class ChannelKind {
    Video,
    ConstantBlur,
    AdaptiveBlur,
    ObjectCrops,
    ObjectRetained,
    Fc8,
    Gist,
    EyeRoi,
    EyeHist,
    EyeRoiContextBlur,
};

inline constexpr int kNumChannels = 10;

// Stable on-disk / CLI name for a channel.
const std::string& channel_slug(ChannelKind k);
ChannelKind channel_from_slug(const std::string& slug);  // throws ParseError
const std::vector<ChannelKind>& all_channels();

// Channels whose features are frame-scoped (vs. one vector per video).
bool channel_is_frame_scoped(ChannelKind k);

enum class AffectDim { Valence, Arousal };

const std::string& affect_dim_name(AffectDim d);
AffectDim affect_dim_from_name(const std::string& name);

// Binary classification target; positive class is always High.
struct AffectTask {
    AffectDim dimension = AffectDim::Valence;
};

enum class ExpertLabel { Low, High };

struct VideoRecord {
    std::string id;
    double duration_s = 0.0;
    int frame_width = 0;
    int frame_height = 0;
    std::filesystem::path frame_dir;
    ExpertLabel expert_valence = ExpertLabel::Low;
    ExpertLabel expert_arousal = ExpertLabel::Low;

    bool operator==(const VideoRecord&) const = default;
};

struct FrameSample {
    std::string video_id;
    int index = 0;
    double timestamp_s = 0.0;
    Image pixels;
};

// Self-report grids, |raters| x |items|; nullopt marks a missing rating.
struct RatingMatrix {
    std::vector<std::string> raters;
    std::vector<std::string> items;
    std::vector<std::vector<std::optional<int>>> valence;  // each in [-2, 2]
    std::vector<std::vector<std::optional<int>>> arousal;  // each in [0, 4]

    std::size_t n_raters() const { return raters.size(); }
    std::size_t n_items() const { return items.size(); }
    const std::vector<std::vector<std::optional<int>>>& grid(AffectDim d) const {
        return d == AffectDim::Valence ? valence : arousal;
    }

    bool operator==(const RatingMatrix&) const = default;
};

struct GazeSample {
    std::int64_t t_ms = 0;
    double x = 0.0;
    double y = 0.0;
};

struct GazeTrace {
    std::string rater_id;
    std::string video_id;
    std::vector<GazeSample> samples;
};

struct Detection {
    int class_id = 0;  // [0, 79]
    double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
    double confidence = 0.0;
};

struct FeatureVector {
    ChannelKind channel = ChannelKind::Video;
    std::vector<double> values;
    int dim() const { return int(values.size()); }
};

struct GazeIndexEntry {
    std::string rater_id;
    std::string video_id;
    std::filesystem::path path;

    bool operator==(const GazeIndexEntry&) const = default;
};

struct SidecarIndex {
    std::filesystem::path detections_dir;
    std::filesystem::path features_dir;

    bool operator==(const SidecarIndex&) const = default;
};

struct DatasetManifest {
    std::vector<VideoRecord> videos;
    RatingMatrix ratings;
    std::vector<GazeIndexEntry> gaze;
    SidecarIndex sidecars;

    const VideoRecord* find_video(const std::string& id) const;
    const VideoRecord& video(const std::string& id) const;  // throws IntegrityError

    bool operator==(const DatasetManifest&) const = default;
};

}  // namespace affchan
