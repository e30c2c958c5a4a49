#pragma once

#include <vector>

#include "affchan/image.hpp"

namespace affchan {

inline constexpr int kGistSize = 256;    // working resolution
inline constexpr int kGistScales = 4;
inline constexpr int kGistOrients = 8;
inline constexpr int kGistBlocks = 4;    // 4x4 spatial pooling
inline constexpr int kGistDim = kGistScales * kGistOrients * kGistBlocks * kGistBlocks;

// Frequency-domain Gabor transfer functions, FFT-native layout (DC at bin 0,
// explicitly zeroed). Real and non-negative; orientations evenly spaced
// over 180 degrees.
struct GaborBank {
    int n = kGistSize;
    int scales = kGistScales;
    int orients = kGistOrients;
    std::vector<std::vector<double>> filters;  // scales*orients entries, each n*n
};

GaborBank make_gabor_bank(int n = kGistSize, int scales = kGistScales,
                          int orients = kGistOrients);

// Scene-structure descriptor: grayscale -> 256x256 -> log intensity ->
// spectral whitening + local contrast normalization -> per Gabor filter the
// mean response magnitude over a 4x4 block grid. Ordered scale-major,
// orientation-minor, block-last; dim 512; entries >= 0.
std::vector<double> gist_descriptor(const PlaneF& gray);
std::vector<double> gist_descriptor(const Image& img);

}  // namespace affchan
