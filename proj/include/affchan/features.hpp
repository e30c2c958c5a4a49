#pragma once

// Feature tables: one per (channel, video), holding per-frame vectors (or a
// single video-scoped row), plus the design-matrix assembly that feeds the
// classifiers.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affchan/learners.hpp"
#include "affchan/types.hpp"

namespace affchan {

inline constexpr std::size_t kFc7Dim = 4096;
inline constexpr std::size_t kFc8Dim = 1000;

struct FeatureTable {
    std::string video_id;
    ChannelKind channel = ChannelKind::Video;
    std::size_t dim = 0;
    std::vector<int> frame_index;  // one per row; -1 marks a video-scoped row
    std::vector<std::vector<float>> rows;

    std::size_t n_rows() const { return rows.size(); }
};

// <dir>/<channel_slug>/<video_id>.fv
std::filesystem::path feature_table_path(const std::filesystem::path& dir,
                                         ChannelKind channel, const std::string& video_id);

// Binary layout: "AFV1", u32 little-endian header length, JSON header
// {channel, video_id, dim, n_rows}, then row-major little-endian f32. The
// frame-index column lives beside it in a .idx text file, one index per row.
void save_feature_table(const FeatureTable& t, const std::filesystem::path& path);
FeatureTable load_feature_table(const std::filesystem::path& path);

// CSV alternative: header line starting with `frame_index`, then one row per
// line with the remaining columns as the vector.
FeatureTable load_feature_table_csv(const std::filesystem::path& path, ChannelKind channel,
                                    const std::string& video_id);

// Resolves tables across an ordered search path; first hit wins. Both the
// binary and the CSV spelling are accepted at each location.
class FeatureStore {
  public:
    explicit FeatureStore(std::vector<std::filesystem::path> search_dirs);

    std::optional<FeatureTable> try_load(ChannelKind channel,
                                         const std::string& video_id) const;
    FeatureTable load(ChannelKind channel, const std::string& video_id) const;

    const std::vector<std::filesystem::path>& search_dirs() const { return dirs_; }

  private:
    std::vector<std::filesystem::path> dirs_;
};

std::string frame_key(const std::string& video_id, int frame_index);

struct DeepFeatureLoad {
    std::map<std::string, FeatureVector> by_key;  // keyed by frame_key
    std::vector<std::string> missing;             // manifest frames with no row
};

// Ingests precomputed deep features for one channel. Fc8 rows must look like
// a softmax (dim 1000, entries in [0,1], sum 1 within 1e-3); every other
// channel is the 4096-wide penultimate-layer vector.
DeepFeatureLoad load_deep_features(const DatasetManifest& manifest,
                                   const std::filesystem::path& sidecar_dir,
                                   ChannelKind channel);

enum class Window { All, L30, L10 };

const std::string& window_name(Window w);
Window window_from_name(const std::string& name);
const std::vector<Window>& all_windows();

struct DesignMatrix {
    Matrix X;
    std::vector<int> y;               // +1 High, -1 Low
    std::vector<std::string> groups;  // owning video id per row
    std::size_t dim = 0;
};

// Rows are the channel's feature rows whose frame timestamp falls inside the
// window (L30/L10 keep frames with t >= duration - 30/10). Video-scoped
// channels contribute one row per video regardless of window (a warning is
// recorded when the window is not All). Labels come from the video's expert
// label on the task dimension.
DesignMatrix assemble_design_matrix(const DatasetManifest& manifest, const FeatureStore& store,
                                    ChannelKind channel, Window window, AffectTask task,
                                    std::vector<std::string>* warnings = nullptr);

}  // namespace affchan
