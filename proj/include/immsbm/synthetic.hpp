#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "immsbm/dataset.hpp"
#include "immsbm/model.hpp"

namespace immsbm {

enum class PairDistribution { kUniform, kPowerLaw };

struct GeneratorSpec {
    std::size_t I = 10;
    std::size_t O = 5;
    std::size_t T = 2;
    std::optional<std::vector<double>> theta; // I x T, sampled if absent
    std::optional<std::vector<double>> p;     // T x T x O symmetric, sampled if absent
    PairDistribution pair_distribution = PairDistribution::kUniform;
    double power_law_exponent = 1.0;
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
};

// Draw (i,j), then clusters k ~ theta_i and l ~ theta_j, then x ~ p_{k,l}(.).
// Each sample is emitted with its mirror so the dataset is symmetry-closed.
// Returns the dataset together with the ground-truth model.
std::pair<TripletDataset, ImmsbmModel> generate(const GeneratorSpec& spec);

// Replace p with a non-interacting structure built from per-cluster output
// distributions q_k: p_{k,l} = (q_k + q_l) / 2, or one shared q for every
// fiber when fully_constant (then P_{i,j} == P_{i,i} exactly).
GeneratorSpec make_noninteracting(GeneratorSpec spec, bool fully_constant = true);

} // namespace immsbm
