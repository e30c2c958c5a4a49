#pragma once

#include <filesystem>
#include <vector>

#include "affchan/types.hpp"

namespace affchan {

// Number of frames sampled at one per 3 s: ceil(duration / 3).
int frame_count_for_duration(double duration_s);

// Timestamps (seconds) of the sampled frames: 0, 3, 6, ... < duration.
std::vector<double> frame_timestamps(double duration_s);

// Path of frame i inside a frame directory. Timestamps are encoded in the
// filename as integer milliseconds: "<t_ms>.png".
std::filesystem::path frame_path(const std::filesystem::path& frame_dir, int index);

struct FrameRef {
    int index = 0;
    double timestamp_s = 0.0;
    std::filesystem::path path;
};

// Lazy index of a video's sampled frames; no decoding, no existence checks.
std::vector<FrameRef> enumerate_frames(const VideoRecord& video);

// Decode one sampled frame; verifies dimensions against the record.
FrameSample load_frame(const VideoRecord& video, int index);

// Decode every sampled frame of a video.
std::vector<FrameSample> sample_frames(const VideoRecord& video);

}  // namespace affchan
