#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace affchan {

// Interleaved 8-bit RGB.
struct Image {
    int w = 0;
    int h = 0;
    std::vector<std::uint8_t> rgb;  // size w*h*3

    Image() = default;
    Image(int width, int height, std::uint8_t fill = 0)
        : w(width), h(height), rgb(std::size_t(width) * height * 3, fill) {}

    std::uint8_t* px(int x, int y) { return rgb.data() + (std::size_t(y) * w + x) * 3; }
    const std::uint8_t* px(int x, int y) const {
        return rgb.data() + (std::size_t(y) * w + x) * 3;
    }
    bool empty() const { return w == 0 || h == 0; }
    bool operator==(const Image& o) const = default;
};

// Single-channel float plane; the working representation for blurs,
// heatmaps and Gist preprocessing.
struct PlaneF {
    int w = 0;
    int h = 0;
    std::vector<float> v;

    PlaneF() = default;
    PlaneF(int width, int height, float fill = 0.0f)
        : w(width), h(height), v(std::size_t(width) * height, fill) {}

    float& at(int x, int y) { return v[std::size_t(y) * w + x]; }
    float at(int x, int y) const { return v[std::size_t(y) * w + x]; }
    float* row(int y) { return v.data() + std::size_t(y) * w; }
    const float* row(int y) const { return v.data() + std::size_t(y) * w; }
};

// Plane extraction / assembly. Channel c in {0,1,2}.
PlaneF image_plane(const Image& img, int c);
PlaneF image_gray(const Image& img);  // Rec.601 luma
Image planes_to_image(const PlaneF& r, const PlaneF& g, const PlaneF& b);

// Bilinear resample (half-pixel-center mapping, clamped edges).
PlaneF resize_bilinear(const PlaneF& src, int out_w, int out_h);

// 8x8 box-mean downsample; trailing partial blocks average what is there.
PlaneF downsample8(const PlaneF& src);

// I/O. Format chosen by extension: .png (8-bit RGB/gray/palette accepted,
// alpha dropped) or .ppm/.pgm binary. Throws ParseError / MissingDataError.
Image load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& img);
void save_gray_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& gray,
                   int w, int h);

}  // namespace affchan
