#include "affchan/frames.hpp"

#include <cmath>

#include "affchan/common.hpp"

namespace affchan {

namespace fs = std::filesystem;

int frame_count_for_duration(double duration_s) {
    if (!(duration_s > 0.0)) throw ValidationError("duration must be > 0");
    return int(std::ceil(duration_s / kFrameStepS));
}

std::vector<double> frame_timestamps(double duration_s) {
    int n = frame_count_for_duration(duration_s);
    std::vector<double> ts(n);
    for (int i = 0; i < n; ++i) ts[i] = kFrameStepS * i;
    return ts;
}

fs::path frame_path(const fs::path& frame_dir, int index) {
    long long t_ms = 3000LL * index;
    return frame_dir / (std::to_string(t_ms) + ".png");
}

std::vector<FrameRef> enumerate_frames(const VideoRecord& video) {
    std::vector<FrameRef> refs;
    for (double t : frame_timestamps(video.duration_s)) {
        FrameRef r;
        r.index = int(refs.size());
        r.timestamp_s = t;
        r.path = frame_path(video.frame_dir, r.index);
        refs.push_back(std::move(r));
    }
    return refs;
}

FrameSample load_frame(const VideoRecord& video, int index) {
    int n = frame_count_for_duration(video.duration_s);
    if (index < 0 || index >= n)
        throw ValidationError("frame index " + std::to_string(index) + " out of range for " +
                              video.id);
    fs::path p = frame_path(video.frame_dir, index);
    if (!fs::exists(p))
        throw MissingDataError("missing frame: " + p.string());
    FrameSample s;
    s.video_id = video.id;
    s.index = index;
    s.timestamp_s = kFrameStepS * index;
    s.pixels = load_image(p);
    if (s.pixels.w != video.frame_width || s.pixels.h != video.frame_height)
        throw IntegrityError("frame " + p.string() + " is " + std::to_string(s.pixels.w) + "x" +
                             std::to_string(s.pixels.h) + ", record says " +
                             std::to_string(video.frame_width) + "x" +
                             std::to_string(video.frame_height));
    return s;
}

std::vector<FrameSample> sample_frames(const VideoRecord& video) {
    if (!fs::is_directory(video.frame_dir))
        throw MissingDataError("frame_dir missing for " + video.id + ": " +
                               video.frame_dir.string());
    bool any = false;
    for (const auto& e : fs::directory_iterator(video.frame_dir)) {
        (void)e;
        any = true;
        break;
    }
    if (!any) throw MissingDataError("frame_dir empty for " + video.id);

    std::vector<FrameSample> out;
    int n = frame_count_for_duration(video.duration_s);
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(load_frame(video, i));
    return out;
}

}  // namespace affchan
