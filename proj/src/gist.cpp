#include "affchan/gist.hpp"

#include <cmath>

#include "affchan/common.hpp"
#include "affchan/fft.hpp"

namespace affchan {

namespace {

// FFT-native frequency coordinate of bin u (cycles per image, Nyquist = -n/2).
inline double fcoord(int u, int n) { return u < n / 2 ? double(u) : double(u - n); }

// Gaussian low-pass transfer with cutoff fc cycles/image (half-power point).
std::vector<double> lowpass_transfer(int n, double fc) {
    double gfc = fc / std::sqrt(std::log(2.0));
    std::vector<double> g(std::size_t(n) * n);
    for (int v = 0; v < n; ++v) {
        double fy = fcoord(v, n);
        for (int u = 0; u < n; ++u) {
            double fx = fcoord(u, n);
            g[std::size_t(v) * n + u] = std::exp(-(fx * fx + fy * fy) / (gfc * gfc));
        }
    }
    return g;
}

// Spectral whitening followed by local contrast normalization, in place.
void prefilt(std::vector<double>& img, const Fft& fft, const std::vector<double>& gf) {
    int n = fft.size();
    std::size_t sz = std::size_t(n) * n;

    std::vector<double> re = img, im(sz, 0.0);
    fft2_forward(fft, re, im);
    for (std::size_t i = 0; i < sz; ++i) {
        re[i] *= gf[i];
        im[i] *= gf[i];
    }
    fft2_inverse(fft, re, im);
    for (std::size_t i = 0; i < sz; ++i) img[i] -= re[i];

    std::vector<double> re2(sz), im2(sz, 0.0);
    for (std::size_t i = 0; i < sz; ++i) re2[i] = img[i] * img[i];
    fft2_forward(fft, re2, im2);
    for (std::size_t i = 0; i < sz; ++i) {
        re2[i] *= gf[i];
        im2[i] *= gf[i];
    }
    fft2_inverse(fft, re2, im2);
    for (std::size_t i = 0; i < sz; ++i) {
        double localstd = std::sqrt(std::hypot(re2[i], im2[i]));
        img[i] /= 0.2 + localstd;
    }
}

const Fft& shared_fft() {
    static const Fft fft(kGistSize);
    return fft;
}

const std::vector<double>& shared_lowpass() {
    static const std::vector<double> gf = lowpass_transfer(kGistSize, 4.0);
    return gf;
}

const GaborBank& shared_bank() {
    static const GaborBank bank = make_gabor_bank();
    return bank;
}

}  // namespace

GaborBank make_gabor_bank(int n, int scales, int orients) {
    GaborBank bank;
    bank.n = n;
    bank.scales = scales;
    bank.orients = orients;
    double c_ang = 16.0 * orients * orients / (32.0 * 32.0);
    for (int s = 1; s <= scales; ++s) {
        double f_s = 0.3 / std::pow(1.85, s - 1);
        for (int j = 1; j <= orients; ++j) {
            double shift = M_PI / orients * (j - 1);
            std::vector<double> g(std::size_t(n) * n);
            for (int v = 0; v < n; ++v) {
                double fy = fcoord(v, n);
                for (int u = 0; u < n; ++u) {
                    double fx = fcoord(u, n);
                    double fr = std::hypot(fx, fy);
                    double tr = std::atan2(fy, fx) + shift;
                    if (tr < -M_PI) tr += 2.0 * M_PI;
                    if (tr > M_PI) tr -= 2.0 * M_PI;
                    double rad = fr / n / f_s - 1.0;
                    g[std::size_t(v) * n + u] =
                        std::exp(-10.0 * 0.35 * rad * rad - 2.0 * c_ang * M_PI * tr * tr);
                }
            }
            g[0] = 0.0;  // band-pass: reject DC outright
            bank.filters.push_back(std::move(g));
        }
    }
    return bank;
}

std::vector<double> gist_descriptor(const PlaneF& gray) {
    const int n = kGistSize;
    PlaneF work = (gray.w == n && gray.h == n) ? gray : resize_bilinear(gray, n, n);

    std::size_t sz = std::size_t(n) * n;
    std::vector<double> img(sz);
    for (std::size_t i = 0; i < sz; ++i) img[i] = std::log(1.0 + double(work.v[i]));

    const Fft& fft = shared_fft();
    prefilt(img, fft, shared_lowpass());

    std::vector<double> spec_re = img, spec_im(sz, 0.0);
    fft2_forward(fft, spec_re, spec_im);

    const GaborBank& bank = shared_bank();
    const int bs = n / kGistBlocks;
    std::vector<double> out;
    out.reserve(std::size_t(bank.filters.size()) * kGistBlocks * kGistBlocks);
    std::vector<double> re(sz), im(sz);
    for (const auto& g : bank.filters) {
        for (std::size_t i = 0; i < sz; ++i) {
            re[i] = spec_re[i] * g[i];
            im[i] = spec_im[i] * g[i];
        }
        fft2_inverse(fft, re, im);
        for (int by = 0; by < kGistBlocks; ++by) {
            for (int bx = 0; bx < kGistBlocks; ++bx) {
                double acc = 0.0;
                for (int y = by * bs; y < (by + 1) * bs; ++y)
                    for (int x = bx * bs; x < (bx + 1) * bs; ++x) {
                        std::size_t i = std::size_t(y) * n + x;
                        acc += std::hypot(re[i], im[i]);
                    }
                out.push_back(acc / (double(bs) * bs));
            }
        }
    }
    return out;
}

std::vector<double> gist_descriptor(const Image& img) { return gist_descriptor(image_gray(img)); }

}  // namespace affchan
