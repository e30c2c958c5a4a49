#include "affchan/fft.hpp"

#include <cmath>

#include "affchan/common.hpp"

namespace affchan {

Fft::Fft(int n) : n_(n) {
    if (n < 2 || (n & (n - 1)) != 0) throw ValidationError("fft size must be a power of two");
    rev_.resize(n);
    int bits = 0;
    while ((1 << bits) < n) ++bits;
    for (int i = 0; i < n; ++i) {
        int r = 0;
        for (int b = 0; b < bits; ++b)
            if (i & (1 << b)) r |= 1 << (bits - 1 - b);
        rev_[i] = r;
    }
    for (int len = 2; len <= n; len <<= 1) {
        int half = len / 2;
        std::vector<double> tre(half), tim(half);
        for (int k = 0; k < half; ++k) {
            double a = -2.0 * M_PI * k / len;
            tre[k] = std::cos(a);
            tim[k] = std::sin(a);
        }
        tw_re_.push_back(std::move(tre));
        tw_im_.push_back(std::move(tim));
    }
}

void Fft::transform(double* re, double* im) const {
    for (int i = 0; i < n_; ++i) {
        int j = rev_[i];
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    int stage = 0;
    for (int len = 2; len <= n_; len <<= 1, ++stage) {
        int half = len / 2;
        const double* wr = tw_re_[stage].data();
        const double* wi = tw_im_[stage].data();
        for (int start = 0; start < n_; start += len) {
            for (int k = 0; k < half; ++k) {
                int a = start + k, b = a + half;
                double tr = re[b] * wr[k] - im[b] * wi[k];
                double ti = re[b] * wi[k] + im[b] * wr[k];
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
    }
}

void Fft::forward(double* re, double* im) const { transform(re, im); }

void Fft::inverse(double* re, double* im) const {
    for (int i = 0; i < n_; ++i) im[i] = -im[i];
    transform(re, im);
    double s = 1.0 / n_;
    for (int i = 0; i < n_; ++i) {
        re[i] *= s;
        im[i] = -im[i] * s;
    }
}

namespace {

void transpose_sq(std::vector<double>& a, int n) {
    for (int y = 0; y < n; ++y)
        for (int x = y + 1; x < n; ++x)
            std::swap(a[std::size_t(y) * n + x], a[std::size_t(x) * n + y]);
}

void fft2_pass(const Fft& fft, std::vector<double>& re, std::vector<double>& im,
               bool inverse) {
    int n = fft.size();
    for (int y = 0; y < n; ++y) {
        double* r = re.data() + std::size_t(y) * n;
        double* i = im.data() + std::size_t(y) * n;
        if (inverse)
            fft.inverse(r, i);
        else
            fft.forward(r, i);
    }
    transpose_sq(re, n);
    transpose_sq(im, n);
    for (int y = 0; y < n; ++y) {
        double* r = re.data() + std::size_t(y) * n;
        double* i = im.data() + std::size_t(y) * n;
        if (inverse)
            fft.inverse(r, i);
        else
            fft.forward(r, i);
    }
    transpose_sq(re, n);
    transpose_sq(im, n);
}

}  // namespace

void fft2_forward(const Fft& fft, std::vector<double>& re, std::vector<double>& im) {
    fft2_pass(fft, re, im, false);
}

void fft2_inverse(const Fft& fft, std::vector<double>& re, std::vector<double>& im) {
    fft2_pass(fft, re, im, true);
}

}  // namespace affchan
