// AVX2 variants. Compiled with -mavx2 in an isolated TU; only dispatch calls
// into this file, and only after cpuid confirms support. FMA is deliberately
// not used in conv_row/axpy/mag so that per-element rounding matches the
// scalar reference exactly (mul then add, same tap order).

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "affchan/kernels.hpp"

namespace affchan::kern::avx2 {

namespace {

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, lo);
    lo = _mm_add_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

inline double hsum256d(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    lo = _mm_add_sd(lo, sh);
    return _mm_cvtsd_f64(lo);
}

}  // namespace

float dot_f32(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 va = _mm256_loadu_ps(a + i);
        __m256 vb = _mm256_loadu_ps(b + i);
        acc = _mm256_fmadd_ps(va, vb, acc);
    }
    float s = hsum256(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

float sqdist_f32(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_fmadd_ps(d, d, acc);
    }
    float s = hsum256(acc);
    for (; i < n; ++i) {
        float d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_f32(float a, const float* x, float* y, std::size_t n) {
    __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void scale_f32(float s, float* x, std::size_t n) {
    __m256 vs = _mm256_set1_ps(s);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), vs));
    for (; i < n; ++i) x[i] *= s;
}

void mul_f32(const float* a, float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(b + i,
                         _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) b[i] *= a[i];
}

float sum_f32(const float* x, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float s = hsum256(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

float max_f32(const float* x, std::size_t n) {
    std::size_t i = 0;
    float m = x[0];
    if (n >= 8) {
        __m256 acc = _mm256_loadu_ps(x);
        for (i = 8; i + 8 <= n; i += 8)
            acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
        alignas(32) float tmp[8];
        _mm256_store_ps(tmp, acc);
        m = tmp[0];
        for (int j = 1; j < 8; ++j) m = std::max(m, tmp[j]);
    } else {
        i = 1;
    }
    for (; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

void mag_f32(const float* re, const float* im, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 r = _mm256_loadu_ps(re + i);
        __m256 m = _mm256_loadu_ps(im + i);
        __m256 s = _mm256_add_ps(_mm256_mul_ps(r, r), _mm256_mul_ps(m, m));
        _mm256_storeu_ps(out + i, _mm256_sqrt_ps(s));
    }
    for (; i < n; ++i) out[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
}

double dot_f64(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double s = hsum256d(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sqdist_f64(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum256d(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void mask_select_u8(const std::uint8_t* src, const std::uint8_t* mask,
                    std::uint8_t* dst, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
        __m256i m = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(mask + i));
        __m256i is_zero = _mm256_cmpeq_epi8(m, zero);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i),
                            _mm256_andnot_si256(is_zero, s));
    }
    for (; i < n; ++i) dst[i] = mask[i] ? src[i] : 0;
}

void mask_blend_u8(const std::uint8_t* a, const std::uint8_t* b,
                   const std::uint8_t* mask, std::uint8_t* dst, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
        __m256i m = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(mask + i));
        __m256i is_zero = _mm256_cmpeq_epi8(m, zero);
        // blendv picks from the second operand where the mask byte's high bit
        // is set, so is_zero selects b
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i),
                            _mm256_blendv_epi8(va, vb, is_zero));
    }
    for (; i < n; ++i) dst[i] = mask[i] ? a[i] : b[i];
}

void conv_row_f32(const float* src, std::size_t n, const float* k, int radius,
                  Pad pad, float* dst) {
    const int ni = int(n);
    const int taps = 2 * radius + 1;
    // interior: every tap read is in bounds for all 8 lanes
    int lo = radius;
    int hi = ni - radius;  // exclusive
    if (hi < lo) hi = lo;
    int i = lo;
    for (; i + 8 <= hi; i += 8) {
        __m256 acc = _mm256_setzero_ps();
        const float* p = src + (i - radius);
        for (int j = 0; j < taps; ++j) {
            __m256 kv = _mm256_set1_ps(k[j]);
            acc = _mm256_add_ps(acc, _mm256_mul_ps(kv, _mm256_loadu_ps(p + j)));
        }
        _mm256_storeu_ps(dst + i, acc);
    }
    auto edge = [&](int b, int e) {
        for (int t = b; t < e; ++t) {
            float s = 0.0f;
            for (int j = 0; j < taps; ++j) {
                int idx = t + j - radius;
                if (pad == Pad::Replicate) {
                    idx = std::clamp(idx, 0, ni - 1);
                    s = s + k[j] * src[idx];
                } else if (idx >= 0 && idx < ni) {
                    s = s + k[j] * src[idx];
                }
            }
            dst[t] = s;
        }
    };
    edge(0, std::min(lo, ni));
    edge(i, ni);
}

}  // namespace affchan::kern::avx2
