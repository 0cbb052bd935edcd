#pragma once

#include <filesystem>
#include <unordered_map>
#include <utility>
#include <vector>

#include "immsbm/dataset.hpp"
#include "immsbm/em.hpp"
#include "immsbm/model.hpp"

namespace immsbm {

// Output-marginal frequencies; predicts the same vector for every pair.
class FrequencyTable {
  public:
    static FrequencyTable fit(const TripletDataset& data);

    const std::vector<double>& marginal() const { return marginal_; }
    // Pair arguments are accepted for interface parity and ignored.
    std::vector<double> predict(EntityId i, EntityId j) const;

  private:
    std::vector<double> marginal_;
};

// Non-interacting MMSBM baseline: theta [I x T], p [T x O].
struct MmsbmModel {
    std::size_t T = 0;
    Vocabulary vocab;
    std::vector<double> theta; // I x T
    std::vector<double> p;     // T x O

    std::size_t num_inputs() const { return vocab.num_inputs(); }
    std::size_t num_outputs() const { return vocab.num_outputs(); }
    const double* theta_row(EntityId i) const { return theta.data() + i * T; }
    const double* p_row(std::size_t k) const { return p.data() + k * num_outputs(); }

    // P_i(.) = sum_k theta_{i,k} p_k(.)
    std::vector<double> predict_input(EntityId i) const;
    // Pair prediction for evaluation: mean of the two single-input vectors.
    std::vector<double> predict_pair(EntityId i, EntityId j) const;

    void validate() const;
};

struct PairObservation {
    EntityId i, x;
    std::uint64_t count;
};

// Project each ordered triplet (i,j,x) to (i,x), keeping counts.
std::vector<PairObservation> project_pairs(const TripletDataset& data);

double mmsbm_log_likelihood(const MmsbmModel& model,
                            const std::vector<PairObservation>& pairs);

// Classical MMSBM EM on the projected pairs; same convergence rule, restarts
// and tie-breaking as the interacting model.
std::pair<MmsbmModel, TrainTrace> mmsbm_train(const TripletDataset& data,
                                              const TrainConfig& config);

// AIC sweep for the baseline, k = I(T-1) + T(O-1).
AicTable mmsbm_select_clusters(const TripletDataset& data,
                               const std::vector<std::size_t>& candidate_Ts,
                               TrainConfig config);

void save_model(const MmsbmModel& model, const std::filesystem::path& path);
MmsbmModel load_mmsbm(const std::filesystem::path& path);

// Per-pair empirical conditional frequencies of the reference set. The
// likelihood-maximizing predictor for that set; no predictive value outside it.
class UpperLimit {
  public:
    static UpperLimit fit(const TripletDataset& reference);

    bool knows(EntityId i, EntityId j) const;
    // Conditional frequency vector for a known pair; the reference output
    // marginal (flagged via known_out) otherwise.
    std::vector<double> predict(EntityId i, EntityId j, bool* known_out = nullptr) const;

    double log_likelihood(const TripletDataset& data) const;

  private:
    static std::uint64_t pair_key(EntityId i, EntityId j);
    std::unordered_map<std::uint64_t, std::vector<double>> conditional_;
    std::vector<double> marginal_;
    std::size_t num_outputs_ = 0;
};

} // namespace immsbm
