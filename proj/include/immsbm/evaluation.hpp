#pragma once

#include <functional>
#include <vector>

#include "immsbm/dataset.hpp"

namespace immsbm {

// Probability vector over outputs for an (unordered) input pair.
using Predictor = std::function<std::vector<double>(EntityId, EntityId)>;

struct ScoredInstance {
    EntityId i, j, x;
    double prob;
    bool observed;
    std::uint64_t count;
};

// One instance per (unique unordered test pair, output). Pair-major, outputs
// ascending; (i,j) and (j,i) are deduplicated to i <= j.
std::vector<ScoredInstance> score_all(const Predictor& predictor,
                                      const TripletDataset& test);

struct ThresholdPoint {
    double threshold, precision, recall, f1;
};

struct F1Result {
    double f1 = 0.0;
    double threshold = 0.0;
    bool no_positives = false;
    std::vector<ThresholdPoint> curve; // one point per distinct probability
};

// Threshold sweep over every distinct predicted probability, pooled over all
// instances; returns the maximum F1.
F1Result max_f1(const std::vector<ScoredInstance>& instances);

// Rank-based AUC (probability a random positive outranks a random negative,
// ties 0.5), pooled. Degenerate label sets score 0.5.
double auc_roc(const std::vector<ScoredInstance>& instances);
// Same, averaged per pair instead of pooled.
double auc_roc_per_pair(const std::vector<ScoredInstance>& instances);

enum class PatkDenominator { kMin, kK };

// Per pair: rank outputs by probability (ties by ascending output id), count
// observed outputs in the top k, divide by min(k, #observed) or plain k.
double precision_at_k(const std::vector<ScoredInstance>& instances,
                      std::size_t k = 10,
                      PatkDenominator denom = PatkDenominator::kMin);

struct CalibrationBin {
    double mean_pred = 0.0;
    double frac_observed = 0.0;
    std::size_t count = 0;
};

struct CalibrationResult {
    double mean_abs_gap = 0.0;
    std::vector<CalibrationBin> bins;
};

// Equal-width probability bins; weighted mean of |mean predicted - observed
// frequency| per bin.
CalibrationResult calibration(const std::vector<ScoredInstance>& instances,
                              std::size_t bins = 20);

struct EvalOptions {
    std::size_t patk_k = 10;
    PatkDenominator patk_denominator = PatkDenominator::kMin;
    std::size_t calibration_bins = 20;
    bool per_pair_auc = false;
};

struct EvalReport {
    double max_f1 = 0.0;
    double best_threshold = 0.0;
    double auc_roc = 0.0;
    double precision_at_10 = 0.0;
    double calibration_mean_abs_gap = 0.0;
    bool no_positives = false;
    std::size_t num_pairs = 0;
    std::size_t num_instances = 0;
    std::vector<ThresholdPoint> curve;
};

EvalReport evaluate(const Predictor& predictor, const TripletDataset& test,
                    const EvalOptions& options = {});

} // namespace immsbm
