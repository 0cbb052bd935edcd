// Acceptance gate: ten end-to-end checks, one pass/fail line each.
// Exits non-zero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "immsbm/analysis.hpp"
#include "immsbm/baselines.hpp"
#include "immsbm/dataset.hpp"
#include "immsbm/em.hpp"
#include "immsbm/evaluation.hpp"
#include "immsbm/model.hpp"
#include "immsbm/rng.hpp"
#include "immsbm/synthetic.hpp"

using namespace immsbm;

namespace {

std::vector<ImmsbmModel> g_trained; // accumulated for the symmetry check

bool g_verbose_fail = true;
void note(const char* fmt, double a, double b) {
    if (g_verbose_fail) std::printf("       %s (%.6g vs %.6g)\n", fmt, a, b);
}

// ---- helpers -------------------------------------------------------------

std::set<std::pair<EntityId, EntityId>> observed_pairs(const TripletDataset& ds) {
    std::set<std::pair<EntityId, EntityId>> pairs;
    for (const auto& t : ds.items()) pairs.insert({t.i, t.j});
    return pairs;
}

double mean_l1_to_truth(const ImmsbmModel& model, const ImmsbmModel& truth,
                        const TripletDataset& ds) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [i, j] : observed_pairs(ds)) {
        auto got = model.predict_pair(i, j);
        auto want = truth.predict_pair(i, j);
        double l1 = 0.0;
        for (std::size_t x = 0; x < got.size(); ++x) l1 += std::abs(got[x] - want[x]);
        sum += l1;
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::vector<double> empirical_marginal(const TripletDataset& ds) {
    std::vector<double> freq(ds.vocab().num_outputs(), 0.0);
    double total = 0.0;
    for (const auto& t : ds.items()) {
        freq[t.x] += static_cast<double>(t.count);
        total += static_cast<double>(t.count);
    }
    for (double& f : freq) f /= total;
    return freq;
}

// ---- criterion 1: upper-limit toy ----------------------------------------

bool criterion_upper_limit_toy() {
    auto vocab = Vocabulary::from_labels({"fever", "pallor"},
                                         {"influenza", "anemia"});
    TripletDataset ds(vocab);
    ds.add(0, 1, 0, 2);
    ds.add(1, 0, 0, 2);
    ds.add(0, 1, 1, 1);
    ds.add(1, 0, 1, 1);

    auto upper = UpperLimit::fit(ds);
    auto pred = upper.predict(0, 1);
    if (pred[0] != 2.0 / 3.0 || pred[1] != 1.0 / 3.0) {
        note("conditional frequency not exact", pred[0], 2.0 / 3.0);
        return false;
    }
    double bound = upper.log_likelihood(ds);

    TrainConfig cfg;
    cfg.T = 2;
    cfg.restarts = 5;
    cfg.max_iters = 200;
    auto [model, trace] = train(ds, cfg);
    double ll = log_likelihood(model, ds);
    if (ll > bound + 1e-9) {
        note("trained model beats the bound", ll, bound);
        return false;
    }
    return true;
}

// ---- criterion 2: EM monotonicity ----------------------------------------

bool criterion_monotonicity() {
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        GeneratorSpec spec;
        spec.I = 5 + rep % 16;  // <= 20
        spec.O = 2 + rep % 9;   // <= 10
        spec.T = 2 + rep % 3;   // <= 4
        spec.samples = 4000;
        spec.seed = 1000 + rep;
        auto [ds, truth] = generate(spec);

        TrainConfig cfg;
        cfg.T = spec.T;
        cfg.restarts = 2;
        cfg.max_iters = 120;
        cfg.rel_tol = 1e-6;
        cfg.seed = rep;
        auto [model, trace] = train(ds, cfg);
        for (const auto& rt : trace.restarts)
            for (std::size_t t = 1; t < rt.loglik.size(); ++t)
                if (rt.loglik[t] < rt.loglik[t - 1] -
                                       1e-9 * std::abs(rt.loglik[t - 1])) {
                    note("likelihood decreased", rt.loglik[t], rt.loglik[t - 1]);
                    return false;
                }
        if (rep % 7 == 0) g_trained.push_back(model);
    }
    return true;
}

// ---- criterion 3: parameter recovery -------------------------------------

bool criterion_recovery() {
    GeneratorSpec spec;
    spec.I = 20;
    spec.O = 10;
    spec.T = 3;
    spec.samples = 200000;
    spec.seed = 123;
    auto [ds, truth] = generate(spec);

    TrainConfig cfg;
    cfg.T = 3;
    cfg.restarts = 20;
    cfg.max_iters = 300;
    cfg.seed = 7;
    auto [model, trace] = train(ds, cfg);
    g_trained.push_back(model);

    double l1 = mean_l1_to_truth(model, truth, ds);
    if (l1 > 0.05) {
        note("mean L1 to generator", l1, 0.05);
        return false;
    }
    return true;
}

// ---- criterion 4: non-interacting reduction ------------------------------

bool criterion_noninteracting() {
    GeneratorSpec spec;
    spec.I = 15;
    spec.O = 6;
    spec.T = 3;
    spec.samples = 400000;
    spec.seed = 5;
    spec = make_noninteracting(spec, true);
    auto [ds, truth] = generate(spec);

    TrainConfig cfg;
    cfg.T = 3;
    cfg.restarts = 10;
    cfg.max_iters = 400;
    cfg.rel_tol = 1e-6;
    cfg.seed = 11;
    auto [model, trace] = train(ds, cfg);
    g_trained.push_back(model);

    double v = v_bar(model, ds);
    if (v > 0.05) {
        note("v_bar on constant-p data", v, 0.05);
        return false;
    }

    auto [baseline, btrace] = mmsbm_train(ds, cfg);
    auto marginal = empirical_marginal(ds);
    double l1_bl = 0.0, l1_freq = 0.0;
    std::size_t n = 0;
    for (const auto& [i, j] : observed_pairs(ds)) {
        auto got = model.predict_pair(i, j);
        auto bl = baseline.predict_pair(i, j);
        for (std::size_t x = 0; x < got.size(); ++x) {
            l1_bl += std::abs(got[x] - bl[x]);
            l1_freq += std::abs(got[x] - marginal[x]);
        }
        ++n;
    }
    l1_bl /= static_cast<double>(n);
    l1_freq /= static_cast<double>(n);
    if (l1_bl > 0.02) {
        note("mean L1 to the non-interacting baseline", l1_bl, 0.02);
        return false;
    }
    if (l1_freq > 0.02) {
        note("mean L1 to the empirical frequency", l1_freq, 0.02);
        return false;
    }
    return true;
}

// ---- criterion 5: T=1 exactness ------------------------------------------

bool criterion_t1_exact() {
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
        GeneratorSpec spec;
        spec.I = 8 + 3 * rep;
        spec.O = 3 + 2 * rep;
        spec.T = 2;
        spec.samples = 3000;
        spec.seed = 40 + rep;
        auto [ds, truth] = generate(spec);

        TrainConfig cfg;
        cfg.T = 1;
        cfg.restarts = 2;
        auto [model, trace] = train(ds, cfg);
        g_trained.push_back(model);

        auto freq = empirical_marginal(ds);
        for (EntityId i = 0; i < 3; ++i)
            for (EntityId j = 0; j < 3; ++j) {
                auto pred = model.predict_pair(i, j);
                for (std::size_t x = 0; x < freq.size(); ++x)
                    if (std::abs(pred[x] - freq[x]) > 1e-9) {
                        note("T=1 prediction vs frequency", pred[x], freq[x]);
                        return false;
                    }
            }
    }
    return true;
}

// ---- criterion 6: metric oracles -----------------------------------------

double oracle_max_f1(const std::vector<ScoredInstance>& inst) {
    std::set<double> thresholds;
    for (const auto& s : inst) thresholds.insert(s.prob);
    double best = 0.0;
    for (double t : thresholds) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (const auto& s : inst) {
            bool hit = s.prob >= t;
            if (hit && s.observed) ++tp;
            if (hit && !s.observed) ++fp;
            if (!hit && s.observed) ++fn;
        }
        double prec = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
        double rec = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
        double f1 = prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
        best = std::max(best, f1);
    }
    return best;
}

double oracle_auc(const std::vector<ScoredInstance>& inst) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (const auto& pos : inst) {
        if (!pos.observed) continue;
        for (const auto& neg : inst) {
            if (neg.observed) continue;
            ++pairs;
            if (pos.prob > neg.prob)
                wins += 1.0;
            else if (pos.prob == neg.prob)
                wins += 0.5;
        }
    }
    return pairs == 0 ? 0.5 : wins / static_cast<double>(pairs);
}

double oracle_patk(const std::vector<ScoredInstance>& inst, std::size_t k,
                   PatkDenominator denom) {
    std::map<std::pair<EntityId, EntityId>, std::vector<ScoredInstance>> groups;
    for (const auto& s : inst) groups[{s.i, s.j}].push_back(s);
    double total = 0.0;
    std::size_t scored = 0;
    for (auto& [key, g] : groups) {
        std::size_t observed = 0;
        for (const auto& s : g) observed += s.observed ? 1 : 0;
        if (observed == 0) continue;
        std::stable_sort(g.begin(), g.end(),
                         [](const ScoredInstance& a, const ScoredInstance& b) {
                             if (a.prob != b.prob) return a.prob > b.prob;
                             return a.x < b.x;
                         });
        std::size_t hits = 0;
        for (std::size_t n = 0; n < std::min(k, g.size()); ++n)
            hits += g[n].observed ? 1 : 0;
        double den = denom == PatkDenominator::kK
                         ? double(k)
                         : double(std::min(k, observed));
        total += double(hits) / den;
        ++scored;
    }
    return scored == 0 ? 0.0 : total / static_cast<double>(scored);
}

double oracle_calibration(const std::vector<ScoredInstance>& inst,
                          std::size_t bins) {
    std::vector<double> pred(bins, 0.0), obs(bins, 0.0);
    std::vector<std::size_t> n(bins, 0);
    for (const auto& s : inst) {
        auto b = std::min<std::size_t>(
            bins - 1, static_cast<std::size_t>(s.prob * double(bins)));
        pred[b] += s.prob;
        obs[b] += s.observed ? 1.0 : 0.0;
        ++n[b];
    }
    double gap = 0.0;
    std::size_t total = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (n[b] == 0) continue;
        gap += double(n[b]) * std::abs(pred[b] / double(n[b]) - obs[b] / double(n[b]));
        total += n[b];
    }
    return total == 0 ? 0.0 : gap / static_cast<double>(total);
}

bool criterion_metric_oracles() {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 50; ++rep) {
        std::size_t count = 10 + uniform_index(rng, 191); // <= 200
        std::vector<ScoredInstance> inst;
        EntityId pair = 0;
        for (std::size_t n = 0; n < count; ++n) {
            if (n % 7 == 0) ++pair;
            ScoredInstance s;
            s.i = pair;
            s.j = pair + 1;
            s.x = static_cast<EntityId>(n % 7);
            s.prob = double(uniform_index(rng, 21)) / 20.0; // ties happen
            s.observed = uniform01(rng) < 0.35;
            s.count = 1;
            inst.push_back(s);
        }
        if (std::abs(max_f1(inst).f1 - oracle_max_f1(inst)) > 1e-12) return false;
        if (std::abs(auc_roc(inst) - oracle_auc(inst)) > 1e-12) return false;
        for (auto denom : {PatkDenominator::kMin, PatkDenominator::kK})
            if (std::abs(precision_at_k(inst, 10, denom) -
                         oracle_patk(inst, 10, denom)) > 1e-12)
                return false;
        if (std::abs(calibration(inst, 20).mean_abs_gap -
                     oracle_calibration(inst, 20)) > 1e-12)
            return false;
    }
    return true;
}

// ---- criterion 7: entropy anchors ----------------------------------------

bool criterion_entropy_anchors() {
    ImmsbmModel m;
    m.T = 4;
    Vocabulary v;
    for (int i = 0; i < 3; ++i) v.add_input("e" + std::to_string(i));
    v.add_output("x");
    m.vocab = v;
    m.theta = {
        0.0, 1.0, 0.0, 0.0,
        0.25, 0.25, 0.25, 0.25,
        0.5, 0.5, 0.0, 0.0,
    };
    m.p.assign(4 * 4 * 1, 1.0);
    auto h = membership_entropy(m);
    if (h[0] != 0.0) return false;
    if (h[1] != 1.0) return false;
    if (std::abs(h[2] - 0.5) > 1e-12) return false;
    return true;
}

// ---- criterion 8: symmetry contract --------------------------------------

bool criterion_symmetry() {
    if (g_trained.empty()) return false;
    std::mt19937_64 rng(99);
    for (const auto& model : g_trained) {
        try {
            model.validate(); // simplex and p-symmetry at 1e-9
        } catch (...) {
            return false;
        }
        const std::size_t I = model.num_inputs(), O = model.num_outputs();
        for (int draw = 0; draw < 50; ++draw) {
            auto i = static_cast<EntityId>(uniform_index(rng, I));
            auto j = static_cast<EntityId>(uniform_index(rng, I));
            auto pij = model.predict_pair(i, j);
            auto pji = model.predict_pair(j, i);
            for (std::size_t x = 0; x < O; ++x)
                if (std::abs(pij[x] - pji[x]) > 1e-9) {
                    note("pair symmetry violated", pij[x], pji[x]);
                    return false;
                }
        }
    }
    return true;
}

// ---- criterion 9: linear complexity --------------------------------------

TripletDataset dense_dataset(std::size_t I, std::size_t O) {
    Vocabulary v;
    for (std::size_t i = 0; i < I; ++i) v.add_input("i" + std::to_string(i));
    for (std::size_t x = 0; x < O; ++x) v.add_output("x" + std::to_string(x));
    TripletDataset ds(v);
    for (EntityId i = 0; i < I; ++i)
        for (EntityId j = 0; j < I; ++j)
            for (EntityId x = 0; x < O; ++x) ds.add(i, j, x, 1);
    return ds;
}

double per_iteration_seconds(const TripletDataset& ds, std::size_t T) {
    auto items = ds.items();
    std::vector<double> n_first(ds.vocab().num_inputs(), 0.0);
    for (const auto& t : items) n_first[t.i] += static_cast<double>(t.count);
    auto model = random_init(ds.vocab(), T, 3);
    for (int warm = 0; warm < 2; ++warm) em_step(model, items, n_first);

    std::vector<double> trials;
    for (int trial = 0; trial < 5; ++trial) {
        auto t0 = std::chrono::steady_clock::now();
        for (int iter = 0; iter < 8; ++iter) em_step(model, items, n_first);
        trials.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count() /
            8.0);
    }
    std::sort(trials.begin(), trials.end());
    return trials[trials.size() / 2]; // median of 5
}

bool criterion_linear_scaling() {
    auto base = dense_dataset(100, 12);  // 120k unique triplets
    auto twice = dense_dataset(100, 24); // 240k unique triplets
    double t1 = per_iteration_seconds(base, 5);
    double t2 = per_iteration_seconds(twice, 5);
    double ratio = t2 / t1;
    if (ratio < 1.5 || ratio > 2.5) {
        note("2x/1x per-iteration time ratio", ratio, 2.0);
        return false;
    }
    return true;
}

// ---- criterion 10: AIC selection sanity ----------------------------------

bool criterion_aic_selection() {
    std::size_t correct = 0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        GeneratorSpec spec;
        spec.I = 15;
        spec.O = 8;
        spec.T = 3;
        spec.samples = 30000;
        spec.seed = 500 + rep;
        // strong, well-separated memberships so the cluster count is learnable
        std::vector<double> theta(spec.I * 3, 0.1);
        for (std::size_t i = 0; i < spec.I; ++i) theta[i * 3 + i % 3] = 0.8;
        spec.theta = theta;
        auto [ds, truth] = generate(spec);

        TrainConfig cfg;
        cfg.restarts = 4;
        cfg.max_iters = 150;
        cfg.seed = rep;
        auto table = select_clusters(ds, {1, 3, 8}, cfg);
        if (table.best_T == 3) ++correct;
    }
    if (correct < 8) {
        note("T=3 chosen in reps", double(correct), 8.0);
        return false;
    }
    return true;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<bool()> fn;
    };
    const std::vector<Criterion> criteria = {
        {"upper-limit toy bound (2/3 exact, bound never beaten)", criterion_upper_limit_toy},
        {"EM monotonicity on 20 random synthetic datasets", criterion_monotonicity},
        {"parameter recovery, mean L1 <= 0.05", criterion_recovery},
        {"non-interacting data: v_bar <= 0.05, matches baseline within 0.02", criterion_noninteracting},
        {"T=1 training equals empirical frequency within 1e-9", criterion_t1_exact},
        {"metrics match brute-force oracles to 1e-12", criterion_metric_oracles},
        {"membership entropy anchors (0, 1, 0.5)", criterion_entropy_anchors},
        {"trained-model symmetry and simplex contracts at 1e-9", criterion_symmetry},
        {"per-iteration cost linear in unique triplets", criterion_linear_scaling},
        {"AIC picks T=3 from {1,3,8} in >= 8/10 repetitions", criterion_aic_selection},
    };

    int failures = 0;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = criteria[n].fn();
        } catch (const std::exception& e) {
            std::printf("       exception: %s\n", e.what());
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        std::printf("[%s] %2zu. %s (%.1fs)\n", ok ? "PASS" : "FAIL", n + 1,
                    criteria[n].name, secs);
        std::fflush(stdout);
        failures += ok ? 0 : 1;
    }
    if (failures) std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
