#include <atomic>

#include "affchan/common.hpp"
#include "affchan/kernels.hpp"

namespace affchan::kern {

bool cpu_has_avx2() {
#if defined(AFFCHAN_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

namespace {
std::atomic<Isa> g_isa{cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar};
}

Isa active_isa() { return g_isa.load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
    if (isa == Isa::Avx2 && !cpu_has_avx2())
        throw Error("kern: AVX2 requested but not supported by this CPU");
    g_isa.store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::Avx2: return "avx2";
        default: return "scalar";
    }
}

#if defined(AFFCHAN_HAVE_AVX2_TU)
#define AFFCHAN_DISPATCH(fn, ...)                          \
    if (active_isa() == Isa::Avx2) return avx2::fn(__VA_ARGS__); \
    return scalar::fn(__VA_ARGS__)
#else
#define AFFCHAN_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

float dot_f32(const float* a, const float* b, std::size_t n) {
    AFFCHAN_DISPATCH(dot_f32, a, b, n);
}
float sqdist_f32(const float* a, const float* b, std::size_t n) {
    AFFCHAN_DISPATCH(sqdist_f32, a, b, n);
}
void axpy_f32(float a, const float* x, float* y, std::size_t n) {
    AFFCHAN_DISPATCH(axpy_f32, a, x, y, n);
}
void scale_f32(float s, float* x, std::size_t n) {
    AFFCHAN_DISPATCH(scale_f32, s, x, n);
}
void mul_f32(const float* a, float* b, std::size_t n) {
    AFFCHAN_DISPATCH(mul_f32, a, b, n);
}
float sum_f32(const float* x, std::size_t n) { AFFCHAN_DISPATCH(sum_f32, x, n); }
float max_f32(const float* x, std::size_t n) { AFFCHAN_DISPATCH(max_f32, x, n); }
void mag_f32(const float* re, const float* im, float* out, std::size_t n) {
    AFFCHAN_DISPATCH(mag_f32, re, im, out, n);
}
double dot_f64(const double* a, const double* b, std::size_t n) {
    AFFCHAN_DISPATCH(dot_f64, a, b, n);
}
double sqdist_f64(const double* a, const double* b, std::size_t n) {
    AFFCHAN_DISPATCH(sqdist_f64, a, b, n);
}
void axpy_f64(double a, const double* x, double* y, std::size_t n) {
    AFFCHAN_DISPATCH(axpy_f64, a, x, y, n);
}
void mask_select_u8(const std::uint8_t* src, const std::uint8_t* mask,
                    std::uint8_t* dst, std::size_t n) {
    AFFCHAN_DISPATCH(mask_select_u8, src, mask, dst, n);
}
void mask_blend_u8(const std::uint8_t* a, const std::uint8_t* b,
                   const std::uint8_t* mask, std::uint8_t* dst, std::size_t n) {
    AFFCHAN_DISPATCH(mask_blend_u8, a, b, mask, dst, n);
}
void conv_row_f32(const float* src, std::size_t n, const float* k, int radius,
                  Pad pad, float* dst) {
    AFFCHAN_DISPATCH(conv_row_f32, src, n, k, radius, pad, dst);
}

}  // namespace affchan::kern
