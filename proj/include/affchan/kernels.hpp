#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used by the image operators, the Gist filter
// pipeline and the classifiers. A scalar reference implementation always
// exists; an AVX2 variant is selected at runtime when the CPU supports it.
// Both variants of every u8 op and of conv_row are bit-identical; float
// reductions (dot/sum/...) may differ in the last ulps because the SIMD
// versions use parallel accumulators.

namespace affchan::kern {

enum class Isa { Scalar, Avx2 };

bool cpu_has_avx2();
Isa active_isa();
void force_isa(Isa isa);  // throws if the CPU cannot run the requested one
const char* isa_name(Isa isa);

enum class Pad { Replicate, Zero };

// Dispatched entry points.
float dot_f32(const float* a, const float* b, std::size_t n);
float sqdist_f32(const float* a, const float* b, std::size_t n);
void axpy_f32(float a, const float* x, float* y, std::size_t n);  // y += a*x
void scale_f32(float s, float* x, std::size_t n);
void mul_f32(const float* a, float* b, std::size_t n);  // b *= a
float sum_f32(const float* x, std::size_t n);
float max_f32(const float* x, std::size_t n);  // n > 0
void mag_f32(const float* re, const float* im, float* out, std::size_t n);

double dot_f64(const double* a, const double* b, std::size_t n);
double sqdist_f64(const double* a, const double* b, std::size_t n);
void axpy_f64(double a, const double* x, double* y, std::size_t n);  // y += a*x

// mask nonzero selects src (resp. a); zero gives 0 (resp. b)
void mask_select_u8(const std::uint8_t* src, const std::uint8_t* mask,
                    std::uint8_t* dst, std::size_t n);
void mask_blend_u8(const std::uint8_t* a, const std::uint8_t* b,
                   const std::uint8_t* mask, std::uint8_t* dst, std::size_t n);

// 1-D correlation with a (2*radius+1)-tap kernel over one row.
// dst[i] = sum_j k[j] * src[pad(i + j - radius)]
void conv_row_f32(const float* src, std::size_t n, const float* k, int radius,
                  Pad pad, float* dst);

// Reference implementations, callable directly (equivalence tests).
namespace scalar {
float dot_f32(const float* a, const float* b, std::size_t n);
float sqdist_f32(const float* a, const float* b, std::size_t n);
void axpy_f32(float a, const float* x, float* y, std::size_t n);
void scale_f32(float s, float* x, std::size_t n);
void mul_f32(const float* a, float* b, std::size_t n);
float sum_f32(const float* x, std::size_t n);
float max_f32(const float* x, std::size_t n);
void mag_f32(const float* re, const float* im, float* out, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
double sqdist_f64(const double* a, const double* b, std::size_t n);
void axpy_f64(double a, const double* x, double* y, std::size_t n);
void mask_select_u8(const std::uint8_t* src, const std::uint8_t* mask,
                    std::uint8_t* dst, std::size_t n);
void mask_blend_u8(const std::uint8_t* a, const std::uint8_t* b,
                   const std::uint8_t* mask, std::uint8_t* dst, std::size_t n);
void conv_row_f32(const float* src, std::size_t n, const float* k, int radius,
                  Pad pad, float* dst);
}  // namespace scalar

#if defined(AFFCHAN_HAVE_AVX2_TU)
namespace avx2 {
float dot_f32(const float* a, const float* b, std::size_t n);
float sqdist_f32(const float* a, const float* b, std::size_t n);
void axpy_f32(float a, const float* x, float* y, std::size_t n);
void scale_f32(float s, float* x, std::size_t n);
void mul_f32(const float* a, float* b, std::size_t n);
float sum_f32(const float* x, std::size_t n);
float max_f32(const float* x, std::size_t n);
void mag_f32(const float* re, const float* im, float* out, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
double sqdist_f64(const double* a, const double* b, std::size_t n);
void axpy_f64(double a, const double* x, double* y, std::size_t n);
void mask_select_u8(const std::uint8_t* src, const std::uint8_t* mask,
                    std::uint8_t* dst, std::size_t n);
void mask_blend_u8(const std::uint8_t* a, const std::uint8_t* b,
                   const std::uint8_t* mask, std::uint8_t* dst, std::size_t n);
void conv_row_f32(const float* src, std::size_t n, const float* k, int radius,
                  Pad pad, float* dst);
}  // namespace avx2
#endif

}  // namespace affchan::kern
