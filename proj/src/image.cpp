#include "affchan/image.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "affchan/common.hpp"

namespace affchan {

namespace fs = std::filesystem;

PlaneF image_plane(const Image& img, int c) {
    PlaneF p(img.w, img.h);
    const std::uint8_t* s = img.rgb.data() + c;
    for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = float(s[i * 3]);
    return p;
}

PlaneF image_gray(const Image& img) {
    PlaneF p(img.w, img.h);
    const std::uint8_t* s = img.rgb.data();
    for (std::size_t i = 0; i < p.v.size(); ++i) {
        p.v[i] = 0.299f * s[i * 3] + 0.587f * s[i * 3 + 1] + 0.114f * s[i * 3 + 2];
    }
    return p;
}

static std::uint8_t to_u8(float v) {
    long r = std::lround(v);
    if (r < 0) r = 0;
    if (r > 255) r = 255;
    return std::uint8_t(r);
}

Image planes_to_image(const PlaneF& r, const PlaneF& g, const PlaneF& b) {
    Image img(r.w, r.h);
    for (std::size_t i = 0; i < r.v.size(); ++i) {
        img.rgb[i * 3] = to_u8(r.v[i]);
        img.rgb[i * 3 + 1] = to_u8(g.v[i]);
        img.rgb[i * 3 + 2] = to_u8(b.v[i]);
    }
    return img;
}

PlaneF resize_bilinear(const PlaneF& src, int out_w, int out_h) {
    PlaneF dst(out_w, out_h);
    if (src.w <= 0 || src.h <= 0) return dst;
    const float sx = float(src.w) / float(out_w);
    const float sy = float(src.h) / float(out_h);
    for (int y = 0; y < out_h; ++y) {
        float fy = (y + 0.5f) * sy - 0.5f;
        int y0 = int(std::floor(fy));
        float wy = fy - y0;
        int y1 = y0 + 1;
        if (y0 < 0) { y0 = 0; }
        if (y1 < 0) { y1 = 0; }
        if (y0 > src.h - 1) y0 = src.h - 1;
        if (y1 > src.h - 1) y1 = src.h - 1;
        const float* r0 = src.row(y0);
        const float* r1 = src.row(y1);
        float* out = dst.row(y);
        for (int x = 0; x < out_w; ++x) {
            float fx = (x + 0.5f) * sx - 0.5f;
            int x0 = int(std::floor(fx));
            float wx = fx - x0;
            int x1 = x0 + 1;
            if (x0 < 0) x0 = 0;
            if (x1 < 0) x1 = 0;
            if (x0 > src.w - 1) x0 = src.w - 1;
            if (x1 > src.w - 1) x1 = src.w - 1;
            float top = r0[x0] + (r0[x1] - r0[x0]) * wx;
            float bot = r1[x0] + (r1[x1] - r1[x0]) * wx;
            out[x] = top + (bot - top) * wy;
        }
    }
    return dst;
}

PlaneF downsample8(const PlaneF& src) {
    int dw = (src.w + 7) / 8;
    int dh = (src.h + 7) / 8;
    PlaneF dst(dw, dh);
    for (int by = 0; by < dh; ++by) {
        int y0 = by * 8, y1 = std::min(src.h, y0 + 8);
        for (int bx = 0; bx < dw; ++bx) {
            int x0 = bx * 8, x1 = std::min(src.w, x0 + 8);
            float s = 0.0f;
            for (int y = y0; y < y1; ++y) {
                const float* r = src.row(y);
                for (int x = x0; x < x1; ++x) s += r[x];
            }
            dst.at(bx, by) = s / float((y1 - y0) * (x1 - x0));
        }
    }
    return dst;
}

// ---- PNG ----

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void png_warn(png_structp, png_const_charp) {}

}  // namespace

static Image load_png(const fs::path& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw MissingDataError("cannot open image: " + path.string());

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
    if (!png) throw Error("png: allocation failure");
    png_infop info = png_create_info_struct(png);

    Image img;
    std::vector<png_bytep> rows;
    // libpng reports errors by longjmp'ing back here; no C++ objects are
    // created between the setjmp and any libpng call below.
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("png: failed to decode " + path.string());
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img = Image(int(w), int(h));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.rgb.data() + std::size_t(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

static void save_png_impl(const fs::path& path, const std::uint8_t* data, int w, int h,
                          int channels) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot write image: " + path.string());
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
    if (!png) throw Error("png: allocation failure");
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(data + std::size_t(y) * w * channels);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("png: failed to encode " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// ---- PPM / PGM (binary) ----

static Image load_pnm(const fs::path& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw MissingDataError("cannot open image: " + path.string());
    auto next_token = [&]() -> std::string {
        std::string t;
        int c;
        while ((c = std::fgetc(f.get())) != EOF) {
            if (c == '#') {
                while ((c = std::fgetc(f.get())) != EOF && c != '\n') {}
                continue;
            }
            if (std::isspace(c)) {
                if (!t.empty()) break;
                continue;
            }
            t.push_back(char(c));
        }
        return t;
    };
    std::string magic = next_token();
    bool gray = magic == "P5";
    if (!gray && magic != "P6") throw ParseError("pnm: bad magic in " + path.string());
    int w = std::atoi(next_token().c_str());
    int h = std::atoi(next_token().c_str());
    int maxv = std::atoi(next_token().c_str());
    if (w <= 0 || h <= 0 || maxv != 255)
        throw ParseError("pnm: unsupported header in " + path.string());
    Image img(w, h);
    if (gray) {
        std::vector<std::uint8_t> buf(std::size_t(w) * h);
        if (std::fread(buf.data(), 1, buf.size(), f.get()) != buf.size())
            throw ParseError("pnm: truncated " + path.string());
        for (std::size_t i = 0; i < buf.size(); ++i)
            img.rgb[i * 3] = img.rgb[i * 3 + 1] = img.rgb[i * 3 + 2] = buf[i];
    } else {
        if (std::fread(img.rgb.data(), 1, img.rgb.size(), f.get()) != img.rgb.size())
            throw ParseError("pnm: truncated " + path.string());
    }
    return img;
}

static void save_ppm(const fs::path& path, const Image& img) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot write image: " + path.string());
    std::fprintf(f.get(), "P6\n%d %d\n255\n", img.w, img.h);
    std::fwrite(img.rgb.data(), 1, img.rgb.size(), f.get());
}

Image load_image(const fs::path& path) {
    auto ext = path.extension().string();
    if (ext == ".ppm" || ext == ".pgm") return load_pnm(path);
    return load_png(path);
}

void save_image(const fs::path& path, const Image& img) {
    auto ext = path.extension().string();
    if (ext == ".ppm") {
        save_ppm(path, img);
        return;
    }
    save_png_impl(path, img.rgb.data(), img.w, img.h, 3);
}

void save_gray_png(const fs::path& path, const std::vector<std::uint8_t>& gray, int w,
                   int h) {
    if (int(gray.size()) != w * h) throw ContractError("save_gray_png: size mismatch");
    save_png_impl(path, gray.data(), w, h, 1);
}

}  // namespace affchan
