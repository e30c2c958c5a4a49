#pragma once

#include <optional>
#include <string>
#include <vector>

#include "affchan/detector.hpp"
#include "affchan/image.hpp"
#include "affchan/types.hpp"

namespace affchan {

// Fraction of frame width used as the Gaussian blur width.
inline constexpr double kBlurSigmaFrac = 0.2;
inline constexpr int kAdaptiveBlurMaxIter = 10;
// Heat value (0-255 scale) from which a pixel counts as fixated.
inline constexpr float kWarmThreshold = 170.0f;

// Truncated, renormalized 1-D Gaussian; applied separably.
struct BlurKernel {
    double sigma = 0.0;
    int radius = 0;                // ceil(3*sigma)
    std::vector<double> weights;   // 2*radius+1, sums to 1 within 1e-9
};

BlurKernel make_blur_kernel(double sigma);

// Exact runs the separable convolution at full resolution. Fast computes the
// blur on an 8x downsampled plane with sigma/8 and upsamples the result;
// indistinguishable at the sigma this pipeline uses (0.2*width) but far
// cheaper. Auto picks Fast once sigma is large enough to make Exact wasteful.
enum class BlurMode { Exact, Fast, Auto };

Image gaussian_blur(const Image& img, double sigma, BlurMode mode = BlurMode::Auto);
PlaneF gaussian_blur(const PlaneF& plane, double sigma, BlurMode mode = BlurMode::Auto);

struct ChannelMeta {
    int iterations = 0;                 // AdaptiveBlur: number of blur passes
    std::optional<Detection> crop;      // ObjectCrops: source detection
    std::vector<std::string> warnings;  // skipped degenerate crops etc.

    bool operator==(const ChannelMeta&) const = default;
};

struct ChannelImage {
    std::string video_id;
    int frame_index = 0;
    ChannelKind channel = ChannelKind::Video;
    Image pixels;
    ChannelMeta meta;
};

// Gaussian blur with sigma = 0.2 * frame width.
ChannelImage constant_blur(const FrameSample& frame, BlurMode mode = BlurMode::Auto);

// Re-blur (same sigma) until the detector reports no objects; the detector is
// consulted at blur level k after the k-th pass. Throws ConvergenceError if
// detections persist through max_iter passes.
ChannelImage adaptive_blur(const FrameSample& frame, const Detector& detector,
                           int max_iter = kAdaptiveBlurMaxIter,
                           BlurMode mode = BlurMode::Auto);

// One crop per detection, clamped to frame bounds; degenerate boxes are
// skipped and noted in *warnings when given.
std::vector<ChannelImage> object_crops(const FrameSample& frame,
                                       const std::vector<Detection>& dets,
                                       std::vector<std::string>* warnings = nullptr);

// Keeps pixels inside the union of detection boxes, blackens the rest.
ChannelImage object_retained(const FrameSample& frame, const std::vector<Detection>& dets);

// Keeps pixels whose frame-registered heat is >= warm_threshold, blackens the
// rest. heat must match the frame dimensions.
ChannelImage eye_roi(const FrameSample& frame, const PlaneF& heat,
                     float warm_threshold = kWarmThreshold);

// Blurred frame with the raw frame composited back wherever the heat mask is
// set; the mask comes from the threshold, never from pixel values.
ChannelImage eye_roi_context_blur(const FrameSample& frame, const PlaneF& heat,
                                  float warm_threshold = kWarmThreshold,
                                  BlurMode mode = BlurMode::Auto);

// Shared clamping rule for detection boxes; empty optional for degenerate
// boxes. Exposed so mask- and crop-based channels stay pixel-consistent.
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
};
std::optional<PixelRect> clamp_bbox(const Detection& d, int frame_w, int frame_h);

}  // namespace affchan
