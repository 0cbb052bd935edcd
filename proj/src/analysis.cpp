#include "immsbm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "immsbm/errors.hpp"

namespace immsbm {

namespace {

constexpr double kViralityEps = 1e-12;

// Diagonal predictions P_{i,i}(.), computed once per distinct i.
class DiagonalCache {
  public:
    explicit DiagonalCache(const ImmsbmModel& model) : model_(model) {}
    const std::vector<double>& row(EntityId i) {
        auto it = cache_.find(i);
        if (it == cache_.end())
            it = cache_.emplace(i, model_.predict_pair(i, i)).first;
        return it->second;
    }

  private:
    const ImmsbmModel& model_;
    std::unordered_map<EntityId, std::vector<double>> cache_;
};

void check_compatible(const ImmsbmModel& model, const TripletDataset& data) {
    if (model.vocab.num_inputs() != data.vocab().num_inputs() ||
        model.vocab.num_outputs() != data.vocab().num_outputs())
        throw DataError("model/data dimension mismatch");
}

} // namespace

double v_bar(const ImmsbmModel& model, const TripletDataset& data,
             std::uint64_t* skipped) {
    check_compatible(model, data);
    DiagonalCache diag(model);
    std::map<std::pair<EntityId, EntityId>, std::vector<double>> pair_cache;
    double sum = 0.0, weight = 0.0;
    std::uint64_t skip = 0;
    for (const auto& t : data.items()) {
        double p_ii = diag.row(t.i)[t.x];
        if (p_ii < kViralityEps) {
            skip += t.count;
            continue;
        }
        auto key = std::make_pair(t.i, t.j);
        auto it = pair_cache.find(key);
        if (it == pair_cache.end())
            it = pair_cache.emplace(key, model.predict_pair(t.i, t.j)).first;
        double p_ij = it->second[t.x];
        double c = static_cast<double>(t.count);
        sum += c * std::abs(p_ii - p_ij) / p_ii;
        weight += c;
    }
    if (skipped) *skipped = skip;
    return weight == 0.0 ? 0.0 : sum / weight;
}

std::vector<double> v_matrix(const ImmsbmModel& model, const TripletDataset& data) {
    check_compatible(model, data);
    const std::size_t T = model.T;
    DiagonalCache diag(model);
    std::vector<double> num(T * T, 0.0), den(T * T, 0.0);
    for (const auto& t : data.items()) {
        const double* ti = model.theta_row(t.i);
        const double* tj = model.theta_row(t.j);
        double p_ii = diag.row(t.i)[t.x];
        double c = static_cast<double>(t.count);
        for (std::size_t k = 0; k < T; ++k)
            for (std::size_t l = 0; l < T; ++l) {
                double w = c * ti[k] * tj[l];
                num[k * T + l] += w * (model.p_fiber(k, l)[t.x] - p_ii);
                den[k * T + l] += w;
            }
    }
    std::vector<double> v(T * T, 0.0);
    for (std::size_t n = 0; n < T * T; ++n)
        if (den[n] > kViralityEps) v[n] = num[n] / den[n];
    return v;
}

std::vector<double> membership_entropy(const ImmsbmModel& model) {
    const std::size_t I = model.num_inputs(), T = model.T;
    std::vector<double> entropies(I, 0.0);
    if (T == 1) return entropies;
    const double norm = std::log2(static_cast<double>(T));
    for (std::size_t i = 0; i < I; ++i) {
        const double* row = model.theta_row(static_cast<EntityId>(i));
        double h = 0.0;
        for (std::size_t t = 0; t < T; ++t)
            if (row[t] > 0.0) h -= row[t] * std::log2(row[t]);
        entropies[i] = h / norm;
    }
    return entropies;
}

std::vector<std::vector<ClusterMember>> cluster_report(const ImmsbmModel& model,
                                                       double threshold) {
    const std::size_t I = model.num_inputs(), T = model.T;
    std::vector<std::vector<ClusterMember>> clusters(T);
    for (std::size_t k = 0; k < T; ++k) {
        for (EntityId i = 0; i < I; ++i) {
            double m = model.theta_row(i)[k];
            if (m >= threshold)
                clusters[k].push_back({i, model.vocab.input_label(i), m});
        }
        std::sort(clusters[k].begin(), clusters[k].end(),
                  [](const ClusterMember& a, const ClusterMember& b) {
                      if (a.membership != b.membership)
                          return a.membership > b.membership;
                      return a.id < b.id;
                  });
    }
    return clusters;
}

InteractionReport analyze(const ImmsbmModel& model, const TripletDataset& data) {
    InteractionReport report;
    report.v_bar = v_bar(model, data, &report.skipped_triplets);
    report.interaction_factor = 1.0 + report.v_bar;
    report.v_matrix = v_matrix(model, data);
    report.entropies = membership_entropy(model);
    double sum = 0.0;
    for (double e : report.entropies) sum += e;
    report.mean_entropy =
        report.entropies.empty()
            ? 0.0
            : sum / static_cast<double>(report.entropies.size());
    return report;
}

} // namespace immsbm
