#pragma once

#include <string>
#include <vector>

#include "immsbm/dataset.hpp"
#include "immsbm/model.hpp"

namespace immsbm {

// Mean relative deviation of interacting predictions from virality:
// weighted average over triplets of |P_ii(x) - P_ij(x)| / P_ii(x).
// Triplets with vanishing virality are skipped and counted in *skipped.
double v_bar(const ImmsbmModel& model, const TripletDataset& data,
             std::uint64_t* skipped = nullptr);

// [T x T] signed change in output probability attributable to each cluster
// pair: membership-weighted mean of p_{k,l}(x) - P_ii(x).
std::vector<double> v_matrix(const ImmsbmModel& model, const TripletDataset& data);

// Normalized Shannon entropy of each theta row, in [0,1]; T=1 rows are 0.
std::vector<double> membership_entropy(const ImmsbmModel& model);

struct ClusterMember {
    EntityId id;
    std::string label;
    double membership;
};

// Per cluster, entities with membership above the threshold, sorted by
// membership descending (ties by id).
std::vector<std::vector<ClusterMember>> cluster_report(const ImmsbmModel& model,
                                                       double threshold = 0.5);

struct InteractionReport {
    double v_bar = 0.0;
    double interaction_factor = 1.0; // 1 + v_bar
    std::uint64_t skipped_triplets = 0;
    std::vector<double> v_matrix; // T x T row-major
    std::vector<double> entropies;
    double mean_entropy = 0.0;
};

InteractionReport analyze(const ImmsbmModel& model, const TripletDataset& data);

} // namespace immsbm
