#pragma once
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace mpukit {

/*!
 * Deterministic 64-bit generator (splitmix64) with a documented transform to
 * complex standard normals.  Pinned here — not delegated to std::mt19937 or
 * platform libm-dependent distributions — because the rank tables produced
 * from seeded random circuits must be reproducible bit-for-bit across
 * platforms and standard-library versions.
 *
 * Transform per complex entry (row-major fill order):
 *   u1, u2 ~ uniform(0,1]                  (takes the high 53 bits, +1 ulp)
 *   rad    = sqrt(-2 ln u1)
 *   n1     = rad cos(2 pi u2),  n2 = rad sin(2 pi u2)      (Box-Muller)
 *   z      = (n1 + i n2) / sqrt(2)         (unit-variance complex normal)
 */
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /*! Uniform draw in (0, 1]; never returns 0, so log() below is safe. */
    double uniform() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    /*! One complex standard normal (E|z|^2 = 1). */
    std::complex<double> gauss_complex() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * M_PI * u2;
        return {rad * std::cos(ang) / std::sqrt(2.0), rad * std::sin(ang) / std::sqrt(2.0)};
    }

    /*! Row-major n-element complex Gaussian buffer. */
    std::vector<std::complex<double>> gauss_vector(std::size_t n) {
        std::vector<std::complex<double>> out(n);
        for (auto &z : out) z = gauss_complex();
        return out;
    }

  private:
    std::uint64_t state_;
};

/*! Mix several integers into one seed (order-sensitive), for deriving
 *  independent streams from structural data such as tensor dimensions. */
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x8000000080001961ULL;
    for (auto p : parts) {
        SplitMix64 g(h ^ p);
        h = g.next_u64();
    }
    return h;
}

} // namespace mpukit
