#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "immsbm/dataset.hpp"
#include "immsbm/vocabulary.hpp"

namespace immsbm {

inline constexpr double kLogFloor = 1e-300;
inline constexpr double kDenomEps = 1e-12;
inline constexpr double kSimplexTol = 1e-9;

// Membership matrix theta [I x T] plus the cluster-interaction tensor
// p [T x T x O] (fiber (k,l) is a distribution over outputs, symmetric in
// (k,l)). The trained artifact.
struct ImmsbmModel {
    std::size_t T = 0;
    Vocabulary vocab;
    std::vector<double> theta; // row-major, I x T
    std::vector<double> p;     // k-major, T x T x O

    std::size_t num_inputs() const { return vocab.num_inputs(); }
    std::size_t num_outputs() const { return vocab.num_outputs(); }

    const double* theta_row(EntityId i) const { return theta.data() + i * T; }
    double* theta_row(EntityId i) { return theta.data() + i * T; }
    const double* p_fiber(std::size_t k, std::size_t l) const {
        return p.data() + (k * T + l) * num_outputs();
    }
    double* p_fiber(std::size_t k, std::size_t l) {
        return p.data() + (k * T + l) * num_outputs();
    }

    // P_{i,j}(.) = sum_{k,l} theta_{i,k} theta_{j,l} p_{k,l}(.)
    std::vector<double> predict_pair(EntityId i, EntityId j) const;
    // Diagonal prediction P_{i,i}(x).
    double virality(EntityId i, EntityId x) const;

    // Average fibers (k,l) and (l,k).
    void symmetrize_p();
    // Throws NumericError if a simplex or symmetry invariant is broken.
    void validate() const;
};

// Copy of p re-laid-out as [O x T x T], one contiguous T x T slice per
// output. The EM pass and log-likelihood walk this by x.
std::vector<double> p_by_output(const ImmsbmModel& model);

// sum_{(i,j,x)} count * ln P_{i,j}(x), ln arguments floored at kLogFloor.
double log_likelihood(const ImmsbmModel& model, const TripletDataset& data);

void save_model(const ImmsbmModel& model, const std::filesystem::path& path);
ImmsbmModel load_immsbm(const std::filesystem::path& path);

// Discriminator ("immsbm" or "mmsbm") from a model file without loading it.
std::string model_kind(const std::filesystem::path& path);

} // namespace immsbm
