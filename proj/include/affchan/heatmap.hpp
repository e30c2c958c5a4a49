#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "affchan/image.hpp"
#include "affchan/types.hpp"

namespace affchan {

// Gaze density over a 2 s window, normalized so the hottest cell reads 255
// whenever any mass is present.
struct Heatmap {
    PlaneF grid;  // values in [0, 255]
    std::int64_t t_lo_ms = 0;
    std::int64_t t_hi_ms = 0;
};

// Samples land on a coarse grid whose cell size makes the 5-cell smoothing
// kernel span about 200 px of screen; the smoothed grid is upsampled back to
// full resolution.
struct HeatmapConfig {
    int cell_px = 40;
    int kernel_cells = 5;    // odd
    double kernel_sigma = 3.0;
    bool fixations_only = false;  // accumulate fixation centers, not raw samples
};

// Accumulates samples with t in [frame_time-1s, frame_time+1s] over all
// traces; empty windows give an all-zero map.
Heatmap build_heatmap(const std::vector<GazeTrace>& traces, double frame_time_s,
                      int screen_w = kScreenW, int screen_h = kScreenH,
                      const HeatmapConfig& cfg = {});

// Screen-space heatmap -> frame-registered heatmap. The video is assumed
// displayed full-screen, aspect-preserving and centered; mass on the letterbox
// bars is discarded and the result is re-normalized to [0, 255].
PlaneF map_to_frame(const Heatmap& heat, int screen_w, int screen_h, int frame_w, int frame_h);

// Scale so the maximum becomes exactly 255; all-zero planes stay zero.
void max_normalize_255(PlaneF& p);

void save_heatmap_png(const std::filesystem::path& path, const PlaneF& heat);

}  // namespace affchan
