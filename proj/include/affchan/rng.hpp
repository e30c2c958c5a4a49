#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace affchan {

// Deterministic PRNG with portable output. std::shuffle and the std
// distributions are implementation-defined, which would break byte-identical
// reports across toolchains, so shuffling and sampling are spelled out here.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) { s_ = splitmix(seed); }

    // Derived stream: same master seed + same ids -> same stream, no overlap
    // in practice between distinct id tuples.
    Rng(std::uint64_t seed, std::uint64_t stream) {
        s_ = splitmix(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

    std::uint64_t next() {
        // xorshift64* on a splitmix-initialized state
        s_ ^= s_ >> 12;
        s_ ^= s_ << 25;
        s_ ^= s_ >> 27;
        return s_ * 0x2545f4914f6cdd1dULL;
    }

    // [0, 1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), n > 0
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    int range(int lo, int hi) {  // inclusive bounds
        return lo + int(below(std::uint64_t(hi - lo + 1)));
    }

    double gauss() {
        // Box-Muller, one value per call (the mate is discarded; simplicity
        // beats caching here and keeps streams easy to reason about)
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = std::size_t(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t s_;
};

// Order-insensitive is not wanted here: combine is positional.
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

}  // namespace affchan
