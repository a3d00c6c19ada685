#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace qtcnn {

// Deterministic random source. std::mt19937_64 output is pinned by the
// standard, but the std distributions and std::shuffle are not, so every
// draw here is derived from raw engine output. Identical seeds give
// bitwise-identical streams on any conforming platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; draws two uniforms per call.
    double gaussian() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, bound). Modulo bias is negligible for the
    // dataset-sized bounds used here.
    std::uint64_t below(std::uint64_t bound) { return engine_() % bound; }

    // Fisher-Yates with draws from this engine.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace qtcnn
