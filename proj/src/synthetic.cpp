#include "immsbm/synthetic.hpp"

#include <cmath>
#include <string>

#include "immsbm/errors.hpp"
#include "immsbm/rng.hpp"

namespace immsbm {

namespace {

Vocabulary make_vocab(std::size_t I, std::size_t O) {
    Vocabulary v;
    for (std::size_t i = 0; i < I; ++i) v.add_input("in" + std::to_string(i));
    for (std::size_t x = 0; x < O; ++x) v.add_output("out" + std::to_string(x));
    return v;
}

} // namespace

std::pair<TripletDataset, ImmsbmModel> generate(const GeneratorSpec& spec) {
    if (spec.I < 1 || spec.O < 1 || spec.T < 1)
        throw DataError("generate: I, O, T must be >= 1");
    if (spec.samples < 1) throw DataError("generate: samples must be >= 1");

    std::mt19937_64 rng(spec.seed);

    ImmsbmModel truth;
    truth.T = spec.T;
    truth.vocab = make_vocab(spec.I, spec.O);
    if (spec.theta) {
        if (spec.theta->size() != spec.I * spec.T)
            throw DataError("generate: theta has wrong size");
        truth.theta = *spec.theta;
    } else {
        truth.theta.resize(spec.I * spec.T);
        for (std::size_t i = 0; i < spec.I; ++i)
            dirichlet_flat(rng, {truth.theta.data() + i * spec.T, spec.T});
    }
    if (spec.p) {
        if (spec.p->size() != spec.T * spec.T * spec.O)
            throw DataError("generate: p has wrong size");
        truth.p = *spec.p;
    } else {
        truth.p.resize(spec.T * spec.T * spec.O);
        for (std::size_t a = 0; a < spec.T; ++a)
            for (std::size_t b = 0; b < spec.T; ++b)
                dirichlet_flat(rng, {truth.p_fiber(a, b), spec.O});
        truth.symmetrize_p();
    }
    truth.validate();

    // input-marginal weights for the pair draw
    std::vector<double> input_weights(spec.I, 1.0 / static_cast<double>(spec.I));
    if (spec.pair_distribution == PairDistribution::kPowerLaw) {
        double sum = 0.0;
        for (std::size_t i = 0; i < spec.I; ++i) {
            input_weights[i] =
                std::pow(static_cast<double>(i + 1), -spec.power_law_exponent);
            sum += input_weights[i];
        }
        for (double& w : input_weights) w /= sum;
    }

    TripletDataset data(truth.vocab);
    for (std::size_t n = 0; n < spec.samples; ++n) {
        EntityId i = static_cast<EntityId>(sample_categorical(rng, input_weights));
        EntityId j = static_cast<EntityId>(sample_categorical(rng, input_weights));
        std::size_t k = sample_categorical(
            rng, {truth.theta_row(i), spec.T});
        std::size_t l = sample_categorical(
            rng, {truth.theta_row(j), spec.T});
        EntityId x = static_cast<EntityId>(
            sample_categorical(rng, {truth.p_fiber(k, l), spec.O}));
        data.add(i, j, x, 1);
        data.add(j, i, x, 1); // mirror keeps the dataset symmetry-closed
    }
    return {std::move(data), std::move(truth)};
}

GeneratorSpec make_noninteracting(GeneratorSpec spec, bool fully_constant) {
    if (spec.T == 1) return spec;
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::vector<double>> q(spec.T, std::vector<double>(spec.O));
    if (fully_constant) {
        dirichlet_flat(rng, q[0]);
        for (std::size_t k = 1; k < spec.T; ++k) q[k] = q[0];
    } else {
        for (auto& row : q) dirichlet_flat(rng, row);
    }
    std::vector<double> p(spec.T * spec.T * spec.O);
    for (std::size_t a = 0; a < spec.T; ++a)
        for (std::size_t b = 0; b < spec.T; ++b)
            for (std::size_t x = 0; x < spec.O; ++x)
                p[(a * spec.T + b) * spec.O + x] = 0.5 * (q[a][x] + q[b][x]);
    spec.p = std::move(p);
    return spec;
}

} // namespace immsbm
