#include <algorithm>
#include <cmath>

#include "affchan/kernels.hpp"

namespace affchan::kern::scalar {

float dot_f32(const float* a, const float* b, std::size_t n) {
    float s = 0.0f;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

float sqdist_f32(const float* a, const float* b, std::size_t n) {
    float s = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
        float d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_f32(float a, const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void scale_f32(float s, float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

void mul_f32(const float* a, float* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) b[i] *= a[i];
}

float sum_f32(const float* x, std::size_t n) {
    float s = 0.0f;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

float max_f32(const float* x, std::size_t n) {
    float m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

void mag_f32(const float* re, const float* im, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
}

double dot_f64(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sqdist_f64(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void mask_select_u8(const std::uint8_t* src, const std::uint8_t* mask,
                    std::uint8_t* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = mask[i] ? src[i] : 0;
}

void mask_blend_u8(const std::uint8_t* a, const std::uint8_t* b,
                   const std::uint8_t* mask, std::uint8_t* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = mask[i] ? a[i] : b[i];
}

void conv_row_f32(const float* src, std::size_t n, const float* k, int radius,
                  Pad pad, float* dst) {
    const int ni = int(n);
    const int taps = 2 * radius + 1;
    for (int i = 0; i < ni; ++i) {
        float s = 0.0f;
        if (i >= radius && i + radius < ni) {
            const float* p = src + (i - radius);
            for (int j = 0; j < taps; ++j) s = s + k[j] * p[j];
        } else {
            for (int j = 0; j < taps; ++j) {
                int idx = i + j - radius;
                if (pad == Pad::Replicate) {
                    idx = std::clamp(idx, 0, ni - 1);
                    s = s + k[j] * src[idx];
                } else if (idx >= 0 && idx < ni) {
                    s = s + k[j] * src[idx];
                }
            }
        }
        dst[i] = s;
    }
}

}  // namespace affchan::kern::scalar
