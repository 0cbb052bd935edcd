#include "immsbm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "immsbm/errors.hpp"

namespace immsbm {

std::vector<ScoredInstance> score_all(const Predictor& predictor,
                                      const TripletDataset& test) {
    std::set<std::pair<EntityId, EntityId>> pairs;
    for (const auto& t : test.items())
        pairs.insert({std::min(t.i, t.j), std::max(t.i, t.j)});
    const std::size_t O = test.vocab().num_outputs();
    std::vector<ScoredInstance> out;
    out.reserve(pairs.size() * O);
    for (const auto& [i, j] : pairs) {
        std::vector<double> probs = predictor(i, j);
        if (probs.size() != O)
            throw DataError("predictor returned wrong-size probability vector");
        for (EntityId x = 0; x < O; ++x) {
            std::uint64_t c = test.count(i, j, x);
            out.push_back({i, j, x, probs[x], c > 0, c});
        }
    }
    return out;
}

F1Result max_f1(const std::vector<ScoredInstance>& instances) {
    F1Result res;
    std::size_t total_pos = 0;
    for (const auto& inst : instances) total_pos += inst.observed ? 1 : 0;
    if (total_pos == 0) {
        res.no_positives = true;
        return res;
    }
    std::vector<const ScoredInstance*> sorted;
    sorted.reserve(instances.size());
    for (const auto& inst : instances) sorted.push_back(&inst);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto* a, const auto* b) { return a->prob > b->prob; });

    std::size_t tp = 0, pred_pos = 0;
    res.f1 = 0.0;
    for (std::size_t n = 0; n < sorted.size(); ++n) {
        tp += sorted[n]->observed ? 1 : 0;
        ++pred_pos;
        // close the prefix only at distinct-probability boundaries
        if (n + 1 < sorted.size() && sorted[n + 1]->prob == sorted[n]->prob)
            continue;
        double precision = static_cast<double>(tp) / static_cast<double>(pred_pos);
        double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        double f1 = (precision + recall > 0.0)
                        ? 2.0 * precision * recall / (precision + recall)
                        : 0.0;
        res.curve.push_back({sorted[n]->prob, precision, recall, f1});
        if (f1 > res.f1) {
            res.f1 = f1;
            res.threshold = sorted[n]->prob;
        }
    }
    return res;
}

double auc_roc(const std::vector<ScoredInstance>& instances) {
    std::vector<std::pair<double, bool>> v;
    v.reserve(instances.size());
    for (const auto& inst : instances) v.push_back({inst.prob, inst.observed});
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    std::size_t pos = 0;
    for (const auto& [p, obs] : v) pos += obs ? 1 : 0;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) return 0.5;
    // midranks handle ties at 0.5 weight
    double rank_sum_pos = 0.0;
    std::size_t a = 0;
    while (a < n) {
        std::size_t b = a;
        while (b + 1 < n && v[b + 1].first == v[a].first) ++b;
        double midrank = 0.5 * (static_cast<double>(a + 1) + static_cast<double>(b + 1));
        for (std::size_t k = a; k <= b; ++k)
            if (v[k].second) rank_sum_pos += midrank;
        a = b + 1;
    }
    double p = static_cast<double>(pos), q = static_cast<double>(neg);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q);
}

namespace {

template <typename Fn>
void for_each_pair_group(const std::vector<ScoredInstance>& instances, Fn fn) {
    std::map<std::pair<EntityId, EntityId>, std::vector<const ScoredInstance*>> groups;
    for (const auto& inst : instances)
        groups[{inst.i, inst.j}].push_back(&inst);
    for (const auto& [key, group] : groups) fn(group);
}

} // namespace

double auc_roc_per_pair(const std::vector<ScoredInstance>& instances) {
    double sum = 0.0;
    std::size_t n = 0;
    for_each_pair_group(instances, [&](const std::vector<const ScoredInstance*>& g) {
        std::vector<ScoredInstance> local;
        local.reserve(g.size());
        for (const auto* inst : g) local.push_back(*inst);
        sum += auc_roc(local);
        ++n;
    });
    return n == 0 ? 0.5 : sum / static_cast<double>(n);
}

double precision_at_k(const std::vector<ScoredInstance>& instances, std::size_t k,
                      PatkDenominator denom) {
    if (k == 0) throw DataError("precision_at_k: k must be >= 1");
    double sum = 0.0;
    std::size_t n_pairs = 0;
    for_each_pair_group(instances, [&](const std::vector<const ScoredInstance*>& g) {
        std::size_t observed = 0;
        for (const auto* inst : g) observed += inst->observed ? 1 : 0;
        if (observed == 0) return; // pair absent from the test set proper
        std::vector<const ScoredInstance*> ranked = g;
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto* a, const auto* b) {
                             if (a->prob != b->prob) return a->prob > b->prob;
                             return a->x < b->x;
                         });
        std::size_t top = std::min(k, ranked.size());
        std::size_t hits = 0;
        for (std::size_t r = 0; r < top; ++r) hits += ranked[r]->observed ? 1 : 0;
        double d = denom == PatkDenominator::kMin
                       ? static_cast<double>(std::min(k, observed))
                       : static_cast<double>(k);
        sum += static_cast<double>(hits) / d;
        ++n_pairs;
    });
    return n_pairs == 0 ? 0.0 : sum / static_cast<double>(n_pairs);
}

CalibrationResult calibration(const std::vector<ScoredInstance>& instances,
                              std::size_t bins) {
    if (bins == 0) throw DataError("calibration: bins must be >= 1");
    CalibrationResult res;
    res.bins.assign(bins, {});
    std::vector<double> pred_sum(bins, 0.0);
    std::vector<std::size_t> obs_count(bins, 0);
    for (const auto& inst : instances) {
        if (!(inst.prob >= 0.0 && inst.prob <= 1.0))
            throw NumericError("predicted probability outside [0,1]");
        std::size_t b = std::min(bins - 1,
                                 static_cast<std::size_t>(inst.prob *
                                                          static_cast<double>(bins)));
        pred_sum[b] += inst.prob;
        obs_count[b] += inst.observed ? 1 : 0;
        ++res.bins[b].count;
    }
    double gap_sum = 0.0;
    std::size_t total = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (res.bins[b].count == 0) continue;
        double cnt = static_cast<double>(res.bins[b].count);
        res.bins[b].mean_pred = pred_sum[b] / cnt;
        res.bins[b].frac_observed = static_cast<double>(obs_count[b]) / cnt;
        gap_sum += std::abs(res.bins[b].mean_pred - res.bins[b].frac_observed) * cnt;
        total += res.bins[b].count;
    }
    res.mean_abs_gap = total == 0 ? 0.0 : gap_sum / static_cast<double>(total);
    return res;
}

EvalReport evaluate(const Predictor& predictor, const TripletDataset& test,
                    const EvalOptions& options) {
    if (test.empty()) throw DataError("evaluate: empty test set");
    auto instances = score_all(predictor, test);

    EvalReport report;
    report.num_instances = instances.size();
    std::set<std::pair<EntityId, EntityId>> pairs;
    for (const auto& inst : instances) pairs.insert({inst.i, inst.j});
    report.num_pairs = pairs.size();

    F1Result f1 = max_f1(instances);
    report.max_f1 = f1.f1;
    report.best_threshold = f1.threshold;
    report.no_positives = f1.no_positives;
    report.curve = std::move(f1.curve);
    report.auc_roc = options.per_pair_auc ? auc_roc_per_pair(instances)
                                         : auc_roc(instances);
    report.precision_at_10 =
        precision_at_k(instances, options.patk_k, options.patk_denominator);
    report.calibration_mean_abs_gap =
        calibration(instances, options.calibration_bins).mean_abs_gap;
    return report;
}

} // namespace immsbm
