#pragma once

// Stage orchestration behind the CLI: config handling, caching, and the six
// subcommands. Stages communicate only through files under the output dir.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "affchan/eval.hpp"
#include "affchan/gaze.hpp"
#include "affchan/heatmap.hpp"
#include "affchan/learners.hpp"
#include "affchan/synth.hpp"
#include "affchan/types.hpp"

namespace affchan {

struct RunConfig {
    std::filesystem::path manifest_path;
    std::filesystem::path out_dir = "out";
    std::vector<ChannelKind> channels = all_channels();
    std::vector<ClassifierKind> classifiers = all_classifiers();
    std::uint64_t seed = 17;
    int workers = 1;
    std::vector<Window> windows = all_windows();

    int cv_repetitions = kCvRepeats;
    int cv_folds = kCvFolds;
    bool majority_vote = false;
    bool std_over_reps = false;

    double fixation_dispersion_px = kFixationDispersionPx;
    std::int64_t fixation_duration_ms = kFixationDurationMs;
    double warm_threshold = kWarmThreshold;
    HeatmapConfig heatmap;
    GazeHistConfig gaze_hist;

    HyperGrid grid = default_hyper_grid();
    BlurMode blur_mode = BlurMode::Auto;
    double detector_confidence = kDefaultConfidenceThreshold;
    double fdr_q = 0.05;

    std::filesystem::path channels_dir() const { return out_dir / "channels"; }
    std::filesystem::path features_dir() const { return out_dir / "features"; }
    std::filesystem::path gaze_dir() const { return out_dir / "gaze"; }
    std::filesystem::path cache_dir() const { return out_dir / ".cache"; }
};

// Applies a JSON config file on top of flag-derived values: where both name a
// setting, the file wins.
RunConfig load_run_config(const std::optional<std::filesystem::path>& config_file,
                          const RunConfig& flags);

// Stable hex digest of everything that affects outputs, for run_meta.json.
std::string config_fingerprint(const RunConfig& c);

struct StageResult {
    int exit_code = 0;               // 0 success, 2 partial (named skips)
    std::vector<std::string> skips;  // entity-named skip reasons
    std::vector<std::string> notes;
};

StageResult cmd_synth(const RunConfig& c);
StageResult cmd_gaze(const RunConfig& c);
StageResult cmd_features(const RunConfig& c);
StageResult cmd_eval(const RunConfig& c);
StageResult cmd_stats(const RunConfig& c);
StageResult cmd_report(const RunConfig& c);

}  // namespace affchan
