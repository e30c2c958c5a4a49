#include "affchan/synth.hpp"

#include <algorithm>
#include <cmath>

#include "affchan/common.hpp"
#include "affchan/kernels.hpp"

namespace affchan {

namespace {

// Above this sigma the full-resolution convolution buys nothing visible.
constexpr double kFastSigmaThreshold = 16.0;

BlurMode resolve(BlurMode mode, double sigma) {
    if (mode != BlurMode::Auto) return mode;
    return sigma > kFastSigmaThreshold ? BlurMode::Fast : BlurMode::Exact;
}

PlaneF transpose(const PlaneF& p) {
    PlaneF t(p.h, p.w);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) t.at(y, x) = p.at(x, y);
    return t;
}

PlaneF conv_separable(const PlaneF& src, const BlurKernel& k) {
    std::vector<float> kf(k.weights.begin(), k.weights.end());
    PlaneF tmp(src.w, src.h);
    for (int y = 0; y < src.h; ++y)
        kern::conv_row_f32(src.row(y), std::size_t(src.w), kf.data(), k.radius,
                           kern::Pad::Replicate, tmp.row(y));
    PlaneF tt = transpose(tmp);
    PlaneF out_t(tt.w, tt.h);
    for (int y = 0; y < tt.h; ++y)
        kern::conv_row_f32(tt.row(y), std::size_t(tt.w), kf.data(), k.radius,
                           kern::Pad::Replicate, out_t.row(y));
    return transpose(out_t);
}

std::vector<std::uint8_t> rect_mask3(int w, int h, const std::vector<PixelRect>& rects) {
    std::vector<std::uint8_t> mask(std::size_t(w) * h * 3, 0);
    for (const auto& r : rects)
        for (int y = r.y0; y < r.y1; ++y)
            std::fill(mask.begin() + (std::size_t(y) * w + r.x0) * 3,
                      mask.begin() + (std::size_t(y) * w + r.x1) * 3, std::uint8_t(1));
    return mask;
}

std::vector<std::uint8_t> heat_mask3(const PlaneF& heat, float thr) {
    std::vector<std::uint8_t> mask(heat.v.size() * 3, 0);
    for (std::size_t i = 0; i < heat.v.size(); ++i)
        if (heat.v[i] >= thr) mask[i * 3] = mask[i * 3 + 1] = mask[i * 3 + 2] = 1;
    return mask;
}

void require_heat_dims(const FrameSample& frame, const PlaneF& heat) {
    if (heat.w != frame.pixels.w || heat.h != frame.pixels.h)
        throw ContractError("heatmap " + std::to_string(heat.w) + "x" + std::to_string(heat.h) +
                            " not registered to frame " + std::to_string(frame.pixels.w) + "x" +
                            std::to_string(frame.pixels.h));
}

ChannelImage make_channel(const FrameSample& frame, ChannelKind kind, Image pixels) {
    ChannelImage ci;
    ci.video_id = frame.video_id;
    ci.frame_index = frame.index;
    ci.channel = kind;
    ci.pixels = std::move(pixels);
    return ci;
}

}  // namespace

BlurKernel make_blur_kernel(double sigma) {
    if (!(sigma > 0.0)) throw ValidationError("blur sigma must be > 0");
    BlurKernel k;
    k.sigma = sigma;
    k.radius = int(std::ceil(3.0 * sigma));
    k.weights.resize(2 * k.radius + 1);
    double sum = 0.0;
    for (int i = -k.radius; i <= k.radius; ++i) {
        double w = std::exp(-0.5 * (double(i) * i) / (sigma * sigma));
        k.weights[i + k.radius] = w;
        sum += w;
    }
    for (double& w : k.weights) w /= sum;
    return k;
}

PlaneF gaussian_blur(const PlaneF& plane, double sigma, BlurMode mode) {
    switch (resolve(mode, sigma)) {
        case BlurMode::Exact:
            return conv_separable(plane, make_blur_kernel(sigma));
        case BlurMode::Fast: {
            PlaneF small = downsample8(plane);
            PlaneF blurred = conv_separable(small, make_blur_kernel(sigma / 8.0));
            return resize_bilinear(blurred, plane.w, plane.h);
        }
        case BlurMode::Auto:
            break;
    }
    throw Error("unreachable blur mode");
}

Image gaussian_blur(const Image& img, double sigma, BlurMode mode) {
    if (img.empty()) throw ValidationError("cannot blur an empty image");
    BlurMode m = resolve(mode, sigma);
    PlaneF planes[3];
    for (int c = 0; c < 3; ++c) planes[c] = gaussian_blur(image_plane(img, c), sigma, m);
    return planes_to_image(planes[0], planes[1], planes[2]);
}

ChannelImage constant_blur(const FrameSample& frame, BlurMode mode) {
    double sigma = kBlurSigmaFrac * frame.pixels.w;
    return make_channel(frame, ChannelKind::ConstantBlur,
                        gaussian_blur(frame.pixels, sigma, mode));
}

ChannelImage adaptive_blur(const FrameSample& frame, const Detector& detector, int max_iter,
                           BlurMode mode) {
    if (max_iter < 1) throw ValidationError("adaptive blur needs max_iter >= 1");
    double sigma = kBlurSigmaFrac * frame.pixels.w;
    Image img = frame.pixels;
    for (int k = 1; k <= max_iter; ++k) {
        img = gaussian_blur(img, sigma, mode);
        if (detector.detect(frame.video_id, frame.index, k).empty()) {
            ChannelImage ci = make_channel(frame, ChannelKind::AdaptiveBlur, std::move(img));
            ci.meta.iterations = k;
            return ci;
        }
    }
    throw ConvergenceError("adaptive blur: detections persist after " +
                           std::to_string(max_iter) + " passes on (" + frame.video_id + ", " +
                           std::to_string(frame.index) + ")");
}

std::optional<PixelRect> clamp_bbox(const Detection& d, int frame_w, int frame_h) {
    PixelRect r;
    r.x0 = std::clamp(int(std::lround(d.x)), 0, frame_w);
    r.y0 = std::clamp(int(std::lround(d.y)), 0, frame_h);
    r.x1 = std::clamp(int(std::lround(d.x + d.w)), 0, frame_w);
    r.y1 = std::clamp(int(std::lround(d.y + d.h)), 0, frame_h);
    if (r.x1 <= r.x0 || r.y1 <= r.y0) return std::nullopt;
    return r;
}

std::vector<ChannelImage> object_crops(const FrameSample& frame,
                                       const std::vector<Detection>& dets,
                                       std::vector<std::string>* warnings) {
    std::vector<ChannelImage> crops;
    const Image& src = frame.pixels;
    for (const auto& d : dets) {
        auto rect = clamp_bbox(d, src.w, src.h);
        if (!rect) {
            if (warnings)
                warnings->push_back("degenerate bbox skipped on (" + frame.video_id + ", " +
                                    std::to_string(frame.index) + ")");
            continue;
        }
        Image crop(rect->width(), rect->height());
        for (int y = 0; y < crop.h; ++y)
            std::copy_n(src.px(rect->x0, rect->y0 + y), std::size_t(crop.w) * 3, crop.px(0, y));
        ChannelImage ci = make_channel(frame, ChannelKind::ObjectCrops, std::move(crop));
        ci.meta.crop = d;
        crops.push_back(std::move(ci));
    }
    return crops;
}

ChannelImage object_retained(const FrameSample& frame, const std::vector<Detection>& dets) {
    const Image& src = frame.pixels;
    std::vector<PixelRect> rects;
    for (const auto& d : dets)
        if (auto r = clamp_bbox(d, src.w, src.h)) rects.push_back(*r);
    std::vector<std::uint8_t> mask = rect_mask3(src.w, src.h, rects);
    Image out(src.w, src.h);
    kern::mask_select_u8(src.rgb.data(), mask.data(), out.rgb.data(), mask.size());
    return make_channel(frame, ChannelKind::ObjectRetained, std::move(out));
}

ChannelImage eye_roi(const FrameSample& frame, const PlaneF& heat, float warm_threshold) {
    require_heat_dims(frame, heat);
    std::vector<std::uint8_t> mask = heat_mask3(heat, warm_threshold);
    Image out(frame.pixels.w, frame.pixels.h);
    kern::mask_select_u8(frame.pixels.rgb.data(), mask.data(), out.rgb.data(), mask.size());
    return make_channel(frame, ChannelKind::EyeRoi, std::move(out));
}

ChannelImage eye_roi_context_blur(const FrameSample& frame, const PlaneF& heat,
                                  float warm_threshold, BlurMode mode) {
    require_heat_dims(frame, heat);
    ChannelImage blurred = constant_blur(frame, mode);
    ChannelImage roi = eye_roi(frame, heat, warm_threshold);
    std::vector<std::uint8_t> mask = heat_mask3(heat, warm_threshold);
    Image out(frame.pixels.w, frame.pixels.h);
    kern::mask_blend_u8(roi.pixels.rgb.data(), blurred.pixels.rgb.data(), mask.data(),
                        out.rgb.data(), mask.size());
    return make_channel(frame, ChannelKind::EyeRoiContextBlur, std::move(out));
}

}  // namespace affchan
