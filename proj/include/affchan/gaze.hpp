#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "affchan/types.hpp"

namespace affchan {

inline constexpr std::int64_t kFixationDurationMs = 100;
inline constexpr double kFixationDispersionPx = 50.0;
// A gap this long between consecutive samples always closes the running
// cluster, so repeated viewings never fuse into one fixation.
inline constexpr std::int64_t kFixationMaxGapMs = 100;

struct Fixation {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    double x = 0.0;  // centroid of member samples
    double y = 0.0;

    std::int64_t duration_ms() const { return end_ms - start_ms; }
};

struct Saccade {
    double from_x = 0.0, from_y = 0.0;
    double to_x = 0.0, to_y = 0.0;
    double length = 0.0;             // px
    std::int64_t duration_ms = 0;    // gap between the two fixations
    double velocity = 0.0;           // px/ms, 1 ms floor on the divisor
    double slope = 0.0;              // dy/dx clamped to [-10, 10]
    double orientation_deg = 0.0;    // atan2 mapped to [0, 360)
};

struct GazeLoadResult {
    GazeTrace trace;
    std::size_t malformed = 0;   // rows skipped as unparseable / out of order
    std::size_t off_screen = 0;  // valid rows dropped by the screen filter
    std::size_t total_rows = 0;  // data rows seen (header excluded)
};

// Reads a gaze CSV (header `t_ms,x_px,y_px`). Malformed rows (bad syntax or
// non-increasing timestamps) are skipped and counted; more than 10% malformed
// rejects the whole file. Samples outside the screen are dropped separately.
GazeLoadResult load_gaze_trace(const std::filesystem::path& path, const std::string& rater_id,
                               const std::string& video_id);

// Greedy left-to-right clustering: a sample joins the running cluster while it
// stays within dispersion_px of the running centroid and within max_gap_ms of
// the previous sample; closed clusters shorter than duration_threshold_ms are
// discarded. Traces with fewer than two samples yield nothing.
std::vector<Fixation> detect_fixations(const GazeTrace& trace,
                                       std::int64_t duration_threshold_ms = kFixationDurationMs,
                                       double dispersion_px = kFixationDispersionPx,
                                       std::int64_t max_gap_ms = kFixationMaxGapMs);

// One saccade per consecutive fixation pair.
std::vector<Saccade> derive_saccades(const std::vector<Fixation>& fixations);

// Histogram family. Bin ranges run min..max of the events being binned
// (per video, per rater); orientation bins are fixed at 10 degrees; the
// spatial grid counts fixation centers in 20x40 px patches of the screen
// (69 x 20 cells), or 40x20 px patches (35 x 39) when transposed.
struct GazeHistConfig {
    bool transpose_spatial_patches = false;
};

struct RaterEvents {
    std::vector<Fixation> fixations;
    std::vector<Saccade> saccades;
};

// bin = floor((v - min) / (max - min) * bins), clamped; min == max puts
// everything in bin 0. Sum of counts always equals values.size().
std::vector<double> minmax_histogram(const std::vector<double>& values, int bins);

std::size_t gaze_hist_block_dim(const GazeHistConfig& cfg = {});
std::vector<double> rater_histogram_block(const RaterEvents& ev,
                                          const GazeHistConfig& cfg = {});

// Concatenates one block per roster rater (zeros when the rater is missing).
std::vector<double> gaze_histogram_features(const std::map<std::string, RaterEvents>& by_rater,
                                            const std::vector<std::string>& roster,
                                            const GazeHistConfig& cfg = {});

void save_fixations_csv(const std::filesystem::path& path, const std::string& rater,
                        const std::string& video, const std::vector<Fixation>& fixations);
void save_saccades_csv(const std::filesystem::path& path, const std::string& rater,
                       const std::string& video, const std::vector<Saccade>& saccades);

}  // namespace affchan
