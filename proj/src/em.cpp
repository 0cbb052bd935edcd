#include "immsbm/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "immsbm/errors.hpp"
#include "immsbm/kernels.hpp"
#include "immsbm/rng.hpp"

namespace immsbm {

namespace {

std::size_t resolve_threads(std::size_t threads) {
    if (threads != 0) return threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

std::vector<double> first_position_counts(const std::vector<Triplet>& items,
                                          std::size_t I) {
    std::vector<double> n(I, 0.0);
    for (const auto& t : items) n[t.i] += static_cast<double>(t.count);
    return n;
}

struct Accumulator {
    std::vector<double> theta_acc;   // I x T
    std::vector<double> p_num_by_x;  // O x T x T
    double loglik = 0.0;
    std::size_t degeneracies = 0;

    Accumulator(std::size_t I, std::size_t T, std::size_t O)
        : theta_acc(I * T, 0.0), p_num_by_x(O * T * T, 0.0) {}
};

// E contribution of one triplet plus its share of the sufficient statistics.
void accumulate_triplet(const ImmsbmModel& model, const std::vector<double>& by_x,
                        const Triplet& t, Accumulator& acc,
                        std::vector<double>& w, std::vector<double>& rowsum,
                        std::vector<double>& colsum) {
    const std::size_t T = model.T;
    const auto& k = kern::active();
    const double* slice = by_x.data() + static_cast<std::size_t>(t.x) * T * T;
    const double* ti = model.theta_row(t.i);
    const double* tj = model.theta_row(t.j);

    double wsum = 0.0;
    for (std::size_t a = 0; a < T; ++a) {
        rowsum[a] = k.mul3(ti[a], slice + a * T, tj, w.data() + a * T, T);
        wsum += rowsum[a];
    }

    const double c = static_cast<double>(t.count);
    if (!(wsum > 0.0) || !std::isfinite(wsum)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(T * T));
        std::fill(rowsum.begin(), rowsum.end(), 1.0 / static_cast<double>(T));
        wsum = 1.0;
        ++acc.degeneracies;
        acc.loglik += c * std::log(kLogFloor);
    } else {
        acc.loglik += c * std::log(std::max(wsum, kLogFloor));
    }

    const double scale = c / wsum;
    double* ti_acc = acc.theta_acc.data() + static_cast<std::size_t>(t.i) * T;
    for (std::size_t a = 0; a < T; ++a) ti_acc[a] += scale * rowsum[a];

    std::fill(colsum.begin(), colsum.end(), 0.0);
    for (std::size_t a = 0; a < T; ++a) k.add(w.data() + a * T, colsum.data(), T);
    k.axpy(scale, colsum.data(),
           acc.theta_acc.data() + static_cast<std::size_t>(t.j) * T, T);

    k.axpy(scale, w.data(),
           acc.p_num_by_x.data() + static_cast<std::size_t>(t.x) * T * T, T * T);
}

void run_range(const ImmsbmModel& model, const std::vector<double>& by_x,
               const std::vector<Triplet>& items, std::size_t begin,
               std::size_t end, Accumulator& acc) {
    const std::size_t T = model.T;
    std::vector<double> w(T * T), rowsum(T), colsum(T);
    for (std::size_t n = begin; n < end; ++n)
        accumulate_triplet(model, by_x, items[n], acc, w, rowsum, colsum);
}

} // namespace

ImmsbmModel random_init(const Vocabulary& vocab, std::size_t T,
                        std::uint64_t seed) {
    if (T < 1) throw DataError("T must be >= 1");
    ImmsbmModel m;
    m.T = T;
    m.vocab = vocab;
    const std::size_t I = vocab.num_inputs(), O = vocab.num_outputs();
    m.theta.resize(I * T);
    m.p.resize(T * T * O);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < I; ++i)
        dirichlet_flat(rng, {m.theta.data() + i * T, T});
    for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = 0; b < T; ++b)
            dirichlet_flat(rng, {m.p_fiber(a, b), O});
    m.symmetrize_p();
    return m;
}

std::vector<double> responsibilities(const ImmsbmModel& model, EntityId i,
                                     EntityId j, EntityId x,
                                     std::size_t* degenerate) {
    const std::size_t T = model.T;
    if (i >= model.num_inputs() || j >= model.num_inputs() ||
        x >= model.num_outputs())
        throw DataError("responsibilities: id out of range");
    std::vector<double> w(T * T);
    const double* ti = model.theta_row(i);
    const double* tj = model.theta_row(j);
    double wsum = 0.0;
    for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = 0; b < T; ++b) {
            double v = ti[a] * tj[b] * model.p_fiber(a, b)[x];
            w[a * T + b] = v;
            wsum += v;
        }
    if (!(wsum > 0.0) || !std::isfinite(wsum)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(T * T));
        if (degenerate) ++*degenerate;
    } else {
        for (double& v : w) v /= wsum;
    }
    return w;
}

std::vector<std::vector<double>> e_step(const ImmsbmModel& model,
                                        const TripletDataset& data) {
    std::vector<std::vector<double>> out;
    for (const auto& t : data.items())
        out.push_back(responsibilities(model, t.i, t.j, t.x));
    return out;
}

std::vector<double> m_step_theta(const TripletDataset& data,
                                 const ImmsbmModel& current,
                                 const std::vector<std::vector<double>>& omega) {
    const std::size_t T = current.T, I = current.num_inputs();
    const auto items = data.items();
    if (omega.size() != items.size())
        throw DataError("m_step_theta: omega/items size mismatch");
    std::vector<double> acc(I * T, 0.0);
    std::vector<double> n_first = first_position_counts(items, I);
    for (std::size_t n = 0; n < items.size(); ++n) {
        const auto& t = items[n];
        const auto& w = omega[n];
        const double c = static_cast<double>(t.count);
        for (std::size_t a = 0; a < T; ++a)
            for (std::size_t b = 0; b < T; ++b) {
                double v = c * w[a * T + b];
                acc[t.i * T + a] += v; // m in first position, row marginal
                acc[t.j * T + b] += v; // m in second position, column marginal
            }
    }
    std::vector<double> theta = current.theta;
    for (std::size_t m = 0; m < I; ++m) {
        if (n_first[m] <= 0.0) continue; // unseen entity keeps its row
        for (std::size_t a = 0; a < T; ++a)
            theta[m * T + a] = acc[m * T + a] / (2.0 * n_first[m]);
    }
    return theta;
}

std::vector<double> m_step_p(const TripletDataset& data, std::size_t T,
                             const std::vector<std::vector<double>>& omega,
                             std::size_t* degeneracies) {
    const std::size_t O = data.vocab().num_outputs();
    const auto items = data.items();
    if (omega.size() != items.size())
        throw DataError("m_step_p: omega/items size mismatch");
    std::vector<double> num(T * T * O, 0.0);
    for (std::size_t n = 0; n < items.size(); ++n) {
        const auto& t = items[n];
        const double c = static_cast<double>(t.count);
        for (std::size_t a = 0; a < T; ++a)
            for (std::size_t b = 0; b < T; ++b)
                num[(a * T + b) * O + t.x] += c * omega[n][a * T + b];
    }
    std::vector<double> p(T * T * O);
    for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = 0; b < T; ++b) {
            double* fiber = p.data() + (a * T + b) * O;
            const double* f_num = num.data() + (a * T + b) * O;
            double den = kern::active().sum(f_num, O);
            if (den <= kDenomEps) {
                std::fill(fiber, fiber + O, 1.0 / static_cast<double>(O));
                if (degeneracies) ++*degeneracies;
            } else {
                for (std::size_t x = 0; x < O; ++x) fiber[x] = f_num[x] / den;
            }
        }
    // re-symmetrize (no-op up to floating point on symmetric data)
    for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = a + 1; b < T; ++b)
            for (std::size_t x = 0; x < O; ++x) {
                double m = 0.5 * (p[(a * T + b) * O + x] + p[(b * T + a) * O + x]);
                p[(a * T + b) * O + x] = m;
                p[(b * T + a) * O + x] = m;
            }
    return p;
}

EmStepStats em_step(ImmsbmModel& model, const std::vector<Triplet>& items,
                    const std::vector<double>& n_first, std::size_t threads) {
    const std::size_t T = model.T, I = model.num_inputs(), O = model.num_outputs();
    const std::vector<double> by_x = p_by_output(model);
    threads = std::max<std::size_t>(1, std::min(resolve_threads(threads), items.size()));

    Accumulator total(I, T, O);
    if (threads == 1) {
        run_range(model, by_x, items, 0, items.size(), total);
    } else {
        std::vector<Accumulator> parts(threads, Accumulator(I, T, O));
        std::vector<std::thread> pool;
        const std::size_t chunk = (items.size() + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            std::size_t begin = t * chunk;
            std::size_t end = std::min(items.size(), begin + chunk);
            pool.emplace_back([&, t, begin, end] {
                run_range(model, by_x, items, begin, end, parts[t]);
            });
        }
        for (auto& th : pool) th.join();
        // merge in chunk order: deterministic for a fixed thread count
        const auto& k = kern::active();
        for (const auto& part : parts) {
            k.add(part.theta_acc.data(), total.theta_acc.data(), I * T);
            k.add(part.p_num_by_x.data(), total.p_num_by_x.data(), O * T * T);
            total.loglik += part.loglik;
            total.degeneracies += part.degeneracies;
        }
    }

    std::size_t p_degen = 0;
    for (std::size_t m = 0; m < I; ++m) {
        if (n_first[m] <= 0.0) continue;
        double inv = 1.0 / (2.0 * n_first[m]);
        for (std::size_t a = 0; a < T; ++a)
            model.theta[m * T + a] = total.theta_acc[m * T + a] * inv;
    }
    for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = 0; b < T; ++b) {
            double* fiber = model.p_fiber(a, b);
            double den = 0.0;
            for (std::size_t x = 0; x < O; ++x)
                den += total.p_num_by_x[(x * T + a) * T + b];
            if (den <= kDenomEps) {
                std::fill(fiber, fiber + O, 1.0 / static_cast<double>(O));
                ++p_degen;
            } else {
                for (std::size_t x = 0; x < O; ++x)
                    fiber[x] = total.p_num_by_x[(x * T + a) * T + b] / den;
            }
        }
    model.symmetrize_p();

    if (!std::isfinite(total.loglik))
        throw NumericError("log-likelihood diverged during EM");
    return {total.loglik, total.degeneracies + p_degen};
}

std::pair<ImmsbmModel, TrainTrace> train(const TripletDataset& data,
                                         const TrainConfig& config) {
    if (data.empty()) throw DataError("train: empty dataset");
    if (config.T < 1) throw DataError("train: T must be >= 1");
    if (config.restarts < 1) throw DataError("train: restarts must be >= 1");
    if (!(config.rel_tol > 0.0)) throw DataError("train: rel_tol must be > 0");
    if (!data.is_symmetric())
        throw DataError("train: dataset is not symmetry-closed");

    const auto items = data.items();
    const auto n_first = first_position_counts(items, data.vocab().num_inputs());

    TrainTrace trace;
    ImmsbmModel best;
    double best_ll = -std::numeric_limits<double>::infinity();

    for (std::size_t r = 0; r < config.restarts; ++r) {
        ImmsbmModel model = random_init(data.vocab(), config.T, config.seed + r);
        RestartTrace rt;
        double prev_ll = 0.0;
        bool converged = false;
        for (std::size_t it = 0; it < config.max_iters; ++it) {
            auto t0 = std::chrono::steady_clock::now();
            // Peek the likelihood first so convergence can stop before a
            // further M update shifts the model past the recorded value.
            ImmsbmModel stepped = model;
            EmStepStats stats = em_step(stepped, items, n_first, config.threads);
            rt.loglik.push_back(stats.loglik);
            rt.degeneracies += stats.degeneracies;
            rt.seconds.push_back(std::chrono::duration<double>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count());
            if (it > 0 &&
                std::abs(stats.loglik - prev_ll) <=
                    config.rel_tol * std::abs(prev_ll)) {
                rt.final_loglik = stats.loglik;
                converged = true;
                break;
            }
            prev_ll = stats.loglik;
            model = std::move(stepped);
        }
        if (!converged) rt.final_loglik = log_likelihood(model, data);
        if (rt.final_loglik > best_ll) {
            best_ll = rt.final_loglik;
            best = model;
            trace.chosen = r;
        }
        trace.restarts.push_back(std::move(rt));
    }
    return {std::move(best), std::move(trace)};
}

AicTable select_clusters(const TripletDataset& data,
                         const std::vector<std::size_t>& candidate_Ts,
                         TrainConfig config) {
    if (candidate_Ts.empty()) throw DataError("select_clusters: empty candidate list");
    const double I = static_cast<double>(data.vocab().num_inputs());
    const double O = static_cast<double>(data.vocab().num_outputs());
    AicTable table;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t T : candidate_Ts) {
        config.T = T;
        auto [model, trace] = train(data, config);
        double ll = trace.restarts[trace.chosen].final_loglik;
        const double Td = static_cast<double>(T);
        double k = config.symmetric_aic
                       ? I * (Td - 1.0) + Td * (Td + 1.0) / 2.0 * (O - 1.0)
                       : I * (Td - 1.0) + Td * Td * (O - 1.0);
        double aic = 2.0 * k - 2.0 * ll;
        table.rows.push_back({T, ll, aic});
        if (aic < best_aic || (aic == best_aic && T < table.best_T)) {
            best_aic = aic;
            table.best_T = T;
        }
    }
    return table;
}

} // namespace immsbm
