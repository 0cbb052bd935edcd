#include "immsbm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "immsbm/errors.hpp"
#include "immsbm/io.hpp"
#include "immsbm/kernels.hpp"
#include "immsbm/rng.hpp"

namespace immsbm {

FrequencyTable FrequencyTable::fit(const TripletDataset& data) {
    if (data.empty()) throw DataError("FrequencyTable: empty dataset");
    FrequencyTable t;
    t.marginal_.assign(data.vocab().num_outputs(), 0.0);
    double total = 0.0;
    for (const auto& tr : data.items()) {
        t.marginal_[tr.x] += static_cast<double>(tr.count);
        total += static_cast<double>(tr.count);
    }
    for (double& v : t.marginal_) v /= total;
    return t;
}

std::vector<double> FrequencyTable::predict(EntityId, EntityId) const {
    return marginal_;
}

std::vector<double> MmsbmModel::predict_input(EntityId i) const {
    if (i >= num_inputs()) throw DataError("predict_input: id out of range");
    const std::size_t O = num_outputs();
    std::vector<double> out(O, 0.0);
    const double* ti = theta_row(i);
    for (std::size_t k = 0; k < T; ++k)
        kern::active().axpy(ti[k], p_row(k), out.data(), O);
    return out;
}

std::vector<double> MmsbmModel::predict_pair(EntityId i, EntityId j) const {
    std::vector<double> a = predict_input(i);
    if (i == j) return a;
    std::vector<double> b = predict_input(j);
    for (std::size_t x = 0; x < a.size(); ++x) a[x] = 0.5 * (a[x] + b[x]);
    return a;
}

void MmsbmModel::validate() const {
    const std::size_t I = num_inputs(), O = num_outputs();
    if (theta.size() != I * T || p.size() != T * O)
        throw NumericError("mmsbm dimensions inconsistent");
    const auto& k = kern::active();
    for (std::size_t i = 0; i < I; ++i)
        if (std::abs(k.sum(theta_row(static_cast<EntityId>(i)), T) - 1.0) >
            kSimplexTol)
            throw NumericError("mmsbm theta row not a simplex");
    for (std::size_t r = 0; r < T; ++r)
        if (std::abs(k.sum(p_row(r), O) - 1.0) > kSimplexTol)
            throw NumericError("mmsbm p row not a simplex");
}

std::vector<PairObservation> project_pairs(const TripletDataset& data) {
    std::map<std::pair<EntityId, EntityId>, std::uint64_t> agg;
    for (const auto& t : data.items()) agg[{t.i, t.x}] += t.count;
    std::vector<PairObservation> out;
    out.reserve(agg.size());
    for (const auto& [key, c] : agg) out.push_back({key.first, key.second, c});
    return out;
}

double mmsbm_log_likelihood(const MmsbmModel& model,
                            const std::vector<PairObservation>& pairs) {
    double ll = 0.0;
    for (const auto& obs : pairs) {
        double s = 0.0;
        const double* ti = model.theta_row(obs.i);
        for (std::size_t k = 0; k < model.T; ++k)
            s += ti[k] * model.p_row(k)[obs.x];
        ll += static_cast<double>(obs.count) * std::log(std::max(s, kLogFloor));
    }
    return ll;
}

namespace {

MmsbmModel mmsbm_random_init(const Vocabulary& vocab, std::size_t T,
                             std::uint64_t seed) {
    MmsbmModel m;
    m.T = T;
    m.vocab = vocab;
    const std::size_t I = vocab.num_inputs(), O = vocab.num_outputs();
    m.theta.resize(I * T);
    m.p.resize(T * O);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < I; ++i)
        dirichlet_flat(rng, {m.theta.data() + i * T, T});
    for (std::size_t k = 0; k < T; ++k)
        dirichlet_flat(rng, {m.p.data() + k * O, O});
    return m;
}

// One fused E+M pass; returns the log-likelihood of the incoming model.
double mmsbm_em_step(MmsbmModel& model, const std::vector<PairObservation>& pairs,
                     const std::vector<double>& n_i) {
    const std::size_t T = model.T, I = model.num_inputs(), O = model.num_outputs();
    std::vector<double> theta_acc(I * T, 0.0), p_num(T * O, 0.0), w(T);
    double ll = 0.0;
    for (const auto& obs : pairs) {
        const double* ti = model.theta_row(obs.i);
        double s = 0.0;
        for (std::size_t k = 0; k < T; ++k) {
            w[k] = ti[k] * model.p_row(k)[obs.x];
            s += w[k];
        }
        const double c = static_cast<double>(obs.count);
        if (!(s > 0.0) || !std::isfinite(s)) {
            std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(T));
            s = 1.0;
            ll += c * std::log(kLogFloor);
        } else {
            ll += c * std::log(std::max(s, kLogFloor));
        }
        const double scale = c / s;
        for (std::size_t k = 0; k < T; ++k) {
            double v = scale * w[k];
            theta_acc[obs.i * T + k] += v;
            p_num[k * O + obs.x] += v;
        }
    }
    for (std::size_t i = 0; i < I; ++i) {
        if (n_i[i] <= 0.0) continue;
        for (std::size_t k = 0; k < T; ++k)
            model.theta[i * T + k] = theta_acc[i * T + k] / n_i[i];
    }
    for (std::size_t k = 0; k < T; ++k) {
        double den = kern::active().sum(p_num.data() + k * O, O);
        double* row = model.p.data() + k * O;
        if (den <= kDenomEps) {
            std::fill(row, row + O, 1.0 / static_cast<double>(O));
        } else {
            for (std::size_t x = 0; x < O; ++x) row[x] = p_num[k * O + x] / den;
        }
    }
    if (!std::isfinite(ll)) throw NumericError("mmsbm log-likelihood diverged");
    return ll;
}

} // namespace

std::pair<MmsbmModel, TrainTrace> mmsbm_train(const TripletDataset& data,
                                              const TrainConfig& config) {
    if (data.empty()) throw DataError("mmsbm_train: empty dataset");
    if (config.T < 1) throw DataError("mmsbm_train: T must be >= 1");
    const auto pairs = project_pairs(data);
    std::vector<double> n_i(data.vocab().num_inputs(), 0.0);
    for (const auto& obs : pairs) n_i[obs.i] += static_cast<double>(obs.count);

    TrainTrace trace;
    MmsbmModel best;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < config.restarts; ++r) {
        MmsbmModel model =
            mmsbm_random_init(data.vocab(), config.T, config.seed + r);
        RestartTrace rt;
        double prev_ll = 0.0;
        bool converged = false;
        for (std::size_t it = 0; it < config.max_iters; ++it) {
            MmsbmModel stepped = model;
            double ll = mmsbm_em_step(stepped, pairs, n_i);
            rt.loglik.push_back(ll);
            if (it > 0 && std::abs(ll - prev_ll) <= config.rel_tol * std::abs(prev_ll)) {
                rt.final_loglik = ll;
                converged = true;
                break;
            }
            prev_ll = ll;
            model = std::move(stepped);
        }
        if (!converged) rt.final_loglik = mmsbm_log_likelihood(model, pairs);
        if (rt.final_loglik > best_ll) {
            best_ll = rt.final_loglik;
            best = model;
            trace.chosen = r;
        }
        trace.restarts.push_back(std::move(rt));
    }
    return {std::move(best), std::move(trace)};
}

AicTable mmsbm_select_clusters(const TripletDataset& data,
                               const std::vector<std::size_t>& candidate_Ts,
                               TrainConfig config) {
    if (candidate_Ts.empty())
        throw DataError("mmsbm_select_clusters: empty candidate list");
    const double I = static_cast<double>(data.vocab().num_inputs());
    const double O = static_cast<double>(data.vocab().num_outputs());
    AicTable table;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t T : candidate_Ts) {
        config.T = T;
        auto [model, trace] = mmsbm_train(data, config);
        double ll = trace.restarts[trace.chosen].final_loglik;
        const double Td = static_cast<double>(T);
        double k = I * (Td - 1.0) + Td * (O - 1.0);
        double aic = 2.0 * k - 2.0 * ll;
        table.rows.push_back({T, ll, aic});
        if (aic < best_aic || (aic == best_aic && T < table.best_T)) {
            best_aic = aic;
            table.best_T = T;
        }
    }
    return table;
}

void save_model(const MmsbmModel& model, const std::filesystem::path& path) {
    nlohmann::json j{{"format_version", 1},
                     {"model_kind", "mmsbm"},
                     {"T", model.T},
                     {"input_labels", model.vocab.input_labels()},
                     {"output_labels", model.vocab.output_labels()},
                     {"theta", model.theta},
                     {"p", model.p}};
    atomic_write(path, j.dump() + "\n");
}

MmsbmModel load_mmsbm(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw DataError("malformed model JSON: " + path.string());
    if (j.value("model_kind", "") != "mmsbm")
        throw DataError("expected model_kind mmsbm in " + path.string());
    MmsbmModel m;
    m.T = j.at("T").get<std::size_t>();
    m.vocab = Vocabulary::from_labels(
        j.at("input_labels").get<std::vector<std::string>>(),
        j.at("output_labels").get<std::vector<std::string>>());
    m.theta = j.at("theta").get<std::vector<double>>();
    m.p = j.at("p").get<std::vector<double>>();
    m.validate();
    return m;
}

std::uint64_t UpperLimit::pair_key(EntityId i, EntityId j) {
    EntityId lo = std::min(i, j), hi = std::max(i, j);
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

UpperLimit UpperLimit::fit(const TripletDataset& reference) {
    if (reference.empty()) throw DataError("UpperLimit: empty reference set");
    UpperLimit u;
    u.num_outputs_ = reference.vocab().num_outputs();
    u.marginal_.assign(u.num_outputs_, 0.0);
    double total = 0.0;
    for (const auto& t : reference.items()) {
        auto& vec = u.conditional_[pair_key(t.i, t.j)];
        if (vec.empty()) vec.assign(u.num_outputs_, 0.0);
        vec[t.x] += static_cast<double>(t.count);
        u.marginal_[t.x] += static_cast<double>(t.count);
        total += static_cast<double>(t.count);
    }
    for (auto& [key, vec] : u.conditional_) {
        double s = kern::active().sum(vec.data(), vec.size());
        for (double& v : vec) v /= s;
    }
    for (double& v : u.marginal_) v /= total;
    return u;
}

bool UpperLimit::knows(EntityId i, EntityId j) const {
    return conditional_.count(pair_key(i, j)) != 0;
}

std::vector<double> UpperLimit::predict(EntityId i, EntityId j,
                                        bool* known_out) const {
    auto it = conditional_.find(pair_key(i, j));
    if (it == conditional_.end()) {
        if (known_out) *known_out = false;
        return marginal_;
    }
    if (known_out) *known_out = true;
    return it->second;
}

double UpperLimit::log_likelihood(const TripletDataset& data) const {
    double ll = 0.0;
    for (const auto& t : data.items()) {
        std::vector<double> pred = predict(t.i, t.j);
        ll += static_cast<double>(t.count) *
              std::log(std::max(pred[t.x], kLogFloor));
    }
    return ll;
}

} // namespace immsbm
