#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "immsbm/dataset.hpp"
#include "immsbm/model.hpp"

namespace immsbm {

struct TrainConfig {
    std::size_t T = 1;
    std::size_t restarts = 10;
    std::size_t max_iters = 1000;
    double rel_tol = 1e-5; // relative log-likelihood change, 0.001%
    std::uint64_t seed = 0;
    std::size_t threads = 1; // 0 = hardware concurrency
    bool symmetric_aic = false;
};

struct RestartTrace {
    std::vector<double> loglik;  // of the model entering each iteration
    std::vector<double> seconds; // wall time per iteration
    double final_loglik = 0.0;
    std::size_t degeneracies = 0;
};

struct TrainTrace {
    std::vector<RestartTrace> restarts;
    std::size_t chosen = 0;
};

// Flat-Dirichlet random initialization; p symmetrized. Seeded deterministically.
ImmsbmModel random_init(const Vocabulary& vocab, std::size_t T, std::uint64_t seed);

// Responsibilities omega_{i,j,x}(k,l) for one triplet, row-major T x T,
// summing to 1. An all-zero denominator yields uniform 1/T^2 and bumps
// *degenerate when given.
std::vector<double> responsibilities(const ImmsbmModel& model, EntityId i,
                                     EntityId j, EntityId x,
                                     std::size_t* degenerate = nullptr);

// Materialized E-step over data.items() order. Test-scale only; the training
// loop fuses E and M and never stores this.
std::vector<std::vector<double>> e_step(const ImmsbmModel& model,
                                        const TripletDataset& data);

// Closed-form M-step updates from materialized responsibilities (aligned with
// data.items()). Entities absent from the data keep their current theta row;
// cluster pairs with no responsibility mass get a uniform fiber.
std::vector<double> m_step_theta(const TripletDataset& data,
                                 const ImmsbmModel& current,
                                 const std::vector<std::vector<double>>& omega);
std::vector<double> m_step_p(const TripletDataset& data, std::size_t T,
                             const std::vector<std::vector<double>>& omega,
                             std::size_t* degeneracies = nullptr);

struct EmStepStats {
    double loglik = 0.0; // of the model entering the step
    std::size_t degeneracies = 0;
};

// One fused E+M pass updating the model in place. n_first[m] is the total
// count of triplets with m in first position (equals n_m on symmetric data).
EmStepStats em_step(ImmsbmModel& model, const std::vector<Triplet>& items,
                    const std::vector<double>& n_first, std::size_t threads = 1);

// Multi-restart EM; best final likelihood wins, lowest restart index on ties.
std::pair<ImmsbmModel, TrainTrace> train(const TripletDataset& data,
                                         const TrainConfig& config);

struct AicRow {
    std::size_t T;
    double loglik;
    double aic;
};

struct AicTable {
    std::vector<AicRow> rows;
    std::size_t best_T = 0;
};

// AIC = 2k - 2*loglik with k = I(T-1) + T^2(O-1), or
// k = I(T-1) + T(T+1)/2 (O-1) with config.symmetric_aic.
AicTable select_clusters(const TripletDataset& data,
                         const std::vector<std::size_t>& candidate_Ts,
                         TrainConfig config);

} // namespace immsbm
