#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

// Distribution helpers built directly on the mt19937_64 stream, so sampled
// values are identical across standard-library implementations.

namespace immsbm {

inline double uniform01(std::mt19937_64& rng) {
    // in (0, 1); never 0, safe under log()
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

// Flat Dirichlet draw (all-ones concentration) via normalized exponentials.
inline void dirichlet_flat(std::mt19937_64& rng, std::span<double> out) {
    double sum = 0.0;
    for (double& v : out) {
        v = -std::log(uniform01(rng));
        sum += v;
    }
    for (double& v : out) v /= sum;
}

inline std::size_t sample_categorical(std::mt19937_64& rng,
                                      std::span<const double> probs) {
    double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

} // namespace immsbm
