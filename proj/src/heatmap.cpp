#include "affchan/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "affchan/common.hpp"
#include "affchan/gaze.hpp"
#include "affchan/kernels.hpp"

namespace affchan {

namespace {

// Separable Gaussian smoothing with zero padding (mass near the border may
// leak off the grid; normalization makes that irrelevant).
PlaneF smooth(const PlaneF& acc, int kernel_cells, double sigma) {
    int radius = kernel_cells / 2;
    std::vector<float> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * double(i) * i / (sigma * sigma));
        k[i + radius] = float(w);
        sum += w;
    }
    for (float& w : k) w = float(w / sum);

    PlaneF tmp(acc.w, acc.h);
    for (int y = 0; y < acc.h; ++y)
        kern::conv_row_f32(acc.row(y), std::size_t(acc.w), k.data(), radius, kern::Pad::Zero,
                           tmp.row(y));
    PlaneF out(acc.w, acc.h);
    std::vector<float> col(acc.h), colo(acc.h);
    for (int x = 0; x < acc.w; ++x) {
        for (int y = 0; y < acc.h; ++y) col[y] = tmp.at(x, y);
        kern::conv_row_f32(col.data(), col.size(), k.data(), radius, kern::Pad::Zero,
                           colo.data());
        for (int y = 0; y < acc.h; ++y) out.at(x, y) = colo[y];
    }
    return out;
}

}  // namespace

void max_normalize_255(PlaneF& p) {
    if (p.v.empty()) return;
    float m = kern::max_f32(p.v.data(), p.v.size());
    if (!(m > 0.0f)) return;
    // v/m is exactly 1 at the max, so the peak lands on 255 exactly
    for (float& v : p.v) v = v / m * 255.0f;
}

Heatmap build_heatmap(const std::vector<GazeTrace>& traces, double frame_time_s, int screen_w,
                      int screen_h, const HeatmapConfig& cfg) {
    if (cfg.cell_px < 1 || cfg.kernel_cells < 1 || cfg.kernel_cells % 2 == 0)
        throw ValidationError("bad heatmap config");
    Heatmap heat;
    heat.t_lo_ms = std::llround(frame_time_s * 1000.0) - 1000;
    heat.t_hi_ms = std::llround(frame_time_s * 1000.0) + 1000;

    int nx = (screen_w + cfg.cell_px - 1) / cfg.cell_px;
    int ny = (screen_h + cfg.cell_px - 1) / cfg.cell_px;
    PlaneF acc(nx, ny);
    auto deposit = [&](double x, double y) {
        int cx = std::clamp(int(x / cfg.cell_px), 0, nx - 1);
        int cy = std::clamp(int(y / cfg.cell_px), 0, ny - 1);
        acc.at(cx, cy) += 1.0f;
    };

    for (const auto& trace : traces) {
        if (cfg.fixations_only) {
            for (const auto& fx : detect_fixations(trace))
                if (fx.end_ms >= heat.t_lo_ms && fx.start_ms <= heat.t_hi_ms)
                    deposit(fx.x, fx.y);
        } else {
            for (const auto& s : trace.samples)
                if (s.t_ms >= heat.t_lo_ms && s.t_ms <= heat.t_hi_ms) deposit(s.x, s.y);
        }
    }

    PlaneF smoothed = smooth(acc, cfg.kernel_cells, cfg.kernel_sigma);
    heat.grid = resize_bilinear(smoothed, screen_w, screen_h);
    max_normalize_255(heat.grid);
    return heat;
}

PlaneF map_to_frame(const Heatmap& heat, int screen_w, int screen_h, int frame_w, int frame_h) {
    if (heat.grid.w != screen_w || heat.grid.h != screen_h)
        throw ContractError("heatmap grid does not match the declared screen dimensions");
    if (frame_w < 1 || frame_h < 1) throw ValidationError("bad frame dimensions");

    double scale = std::min(double(screen_w) / frame_w, double(screen_h) / frame_h);
    int disp_w = std::max(1, int(std::lround(frame_w * scale)));
    int disp_h = std::max(1, int(std::lround(frame_h * scale)));
    int off_x = (screen_w - disp_w) / 2;
    int off_y = (screen_h - disp_h) / 2;

    PlaneF cropped(disp_w, disp_h);
    for (int y = 0; y < disp_h; ++y)
        std::copy_n(heat.grid.row(off_y + y) + off_x, disp_w, cropped.row(y));

    PlaneF out = resize_bilinear(cropped, frame_w, frame_h);
    max_normalize_255(out);
    return out;
}

void save_heatmap_png(const std::filesystem::path& path, const PlaneF& heat) {
    std::vector<std::uint8_t> gray(heat.v.size());
    for (std::size_t i = 0; i < heat.v.size(); ++i)
        gray[i] = std::uint8_t(std::clamp(std::lround(heat.v[i]), 0l, 255l));
    save_gray_png(path, gray, heat.w, heat.h);
}

}  // namespace affchan
