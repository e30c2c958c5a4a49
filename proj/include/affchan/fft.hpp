#pragma once

#include <vector>

namespace affchan {

// Iterative radix-2 FFT over a power-of-two length, split re/im arrays,
// twiddles and bit-reversal precomputed once per size.
class Fft {
public:
    explicit Fft(int n);

    int size() const { return n_; }
    void forward(double* re, double* im) const;
    void inverse(double* re, double* im) const;  // scales by 1/n

private:
    void transform(double* re, double* im) const;

    int n_ = 0;
    std::vector<int> rev_;
    std::vector<std::vector<double>> tw_re_, tw_im_;  // per stage
};

// Row-column 2-D transforms on an n x n plane (row-major, n = fft.size()).
void fft2_forward(const Fft& fft, std::vector<double>& re, std::vector<double>& im);
void fft2_inverse(const Fft& fft, std::vector<double>& re, std::vector<double>& im);

}  // namespace affchan
