#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "immsbm/analysis.hpp"
#include "immsbm/baselines.hpp"
#include "immsbm/dataset.hpp"
#include "immsbm/em.hpp"
#include "immsbm/errors.hpp"
#include "immsbm/evaluation.hpp"
#include "immsbm/io.hpp"
#include "immsbm/model.hpp"
#include "immsbm/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::size_t default_threads() {
    if (const char* env = std::getenv("IMMSBM_THREADS"))
        return static_cast<std::size_t>(std::strtoul(env, nullptr, 10));
    return 0; // auto
}

struct ManifestWriter {
    json manifest;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    ManifestWriter(const std::string& command, int argc, char** argv) {
        manifest["tool_version"] = kVersion;
        manifest["command"] = command;
        std::vector<std::string> args(argv, argv + argc);
        manifest["argv"] = args;
        manifest["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
    }

    void input(const std::string& key, const fs::path& p) {
        manifest["inputs"][key] = p.string();
    }
    void output(const std::string& key, const fs::path& p) {
        manifest["outputs"][key] = p.string();
    }

    void write(const fs::path& path) {
        manifest["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        immsbm::atomic_write(path, manifest.dump(2) + "\n");
    }
};

fs::path manifest_path_for(const fs::path& artifact) {
    fs::path p = artifact;
    p += ".manifest.json";
    return p;
}

std::vector<immsbm::MessageRecord> load_windowed(const fs::path& path,
                                                 std::size_t window) {
    // each line: a JSON array of labels, or {"inputs":[...]} with the ordered
    // sequence; outputs of the window expansion are derived positionally
    std::ifstream in(path);
    if (!in) throw immsbm::DataError("cannot open: " + path.string());
    std::vector<immsbm::MessageRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        json obj = json::parse(line, nullptr, false);
        std::vector<std::string> seq;
        if (obj.is_array())
            seq = obj.get<std::vector<std::string>>();
        else if (obj.is_object() && obj.contains("inputs"))
            seq = obj.at("inputs").get<std::vector<std::string>>();
        else
            throw immsbm::DataError(path.string() + ":" + std::to_string(lineno) +
                                    ": expected a JSON array or {\"inputs\":[...]}");
        auto expanded = immsbm::expand_windows(seq, window);
        records.insert(records.end(), expanded.begin(), expanded.end());
    }
    return records;
}

immsbm::TripletDataset load_for_model(const fs::path& path,
                                      const immsbm::Vocabulary& vocab) {
    return immsbm::load_triplets(path, vocab);
}

std::string csv_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

json report_to_json(const immsbm::EvalReport& report) {
    return json{{"max_f1", report.max_f1},
                {"best_threshold", report.best_threshold},
                {"auc_roc", report.auc_roc},
                {"precision_at_10", report.precision_at_10},
                {"calibration_mean_abs_gap", report.calibration_mean_abs_gap},
                {"no_positives", report.no_positives},
                {"num_pairs", report.num_pairs},
                {"num_instances", report.num_instances}};
}

void write_curve(const std::vector<immsbm::ThresholdPoint>& curve,
                 const fs::path& path) {
    std::ostringstream out;
    out << "threshold,precision,recall,f1\n";
    for (const auto& pt : curve)
        out << csv_double(pt.threshold) << ',' << csv_double(pt.precision) << ','
            << csv_double(pt.recall) << ',' << csv_double(pt.f1) << '\n';
    immsbm::atomic_write(path, out.str());
}

void write_trace_csv(const immsbm::RestartTrace& rt, const fs::path& path) {
    std::ostringstream out;
    out << "iter,loglik,seconds\n";
    for (std::size_t i = 0; i < rt.loglik.size(); ++i) {
        double secs = i < rt.seconds.size() ? rt.seconds[i] : 0.0;
        out << i << ',' << csv_double(rt.loglik[i]) << ',' << csv_double(secs)
            << '\n';
    }
    immsbm::atomic_write(path, out.str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interacting mixed-membership stochastic block model toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // ---- expand ----
    auto* cmd_expand = app.add_subcommand(
        "expand", "Expand a message corpus into a symmetric triplet TSV");
    fs::path expand_in, expand_out;
    std::size_t expand_window = 0;
    cmd_expand->add_option("messages", expand_in, "message JSONL file")->required();
    cmd_expand->add_option("-o,--out", expand_out, "output triplet TSV")->required();
    cmd_expand->add_option("--window", expand_window,
                           "treat each line as an ordered sequence and expand "
                           "with a running window of this size");

    // ---- split ----
    auto* cmd_split = app.add_subcommand(
        "split", "Message-level train/test split into triplet TSVs");
    fs::path split_in, split_dir;
    double split_fraction = 0.1;
    std::uint64_t split_seed = 0;
    cmd_split->add_option("messages", split_in, "message JSONL file")->required();
    cmd_split->add_option("-o,--out-dir", split_dir, "output directory")->required();
    cmd_split->add_option("--test-fraction", split_fraction, "test fraction")
        ->capture_default_str();
    cmd_split->add_option("--seed", split_seed, "split seed")->capture_default_str();

    // ---- train ----
    auto* cmd_train = app.add_subcommand("train", "Train a model with multi-restart EM");
    fs::path train_in, train_out, train_vocab, train_trace;
    std::string train_kind = "immsbm";
    immsbm::TrainConfig train_cfg;
    train_cfg.threads = default_threads();
    cmd_train->add_option("train", train_in, "training triplet TSV")->required();
    cmd_train->add_option("-o,--out", train_out, "output model JSON")->required();
    cmd_train->add_option("--model", train_kind, "immsbm|mmsbm")
        ->check(CLI::IsMember({"immsbm", "mmsbm"}))
        ->capture_default_str();
    cmd_train->add_option("-T,--clusters", train_cfg.T, "number of clusters")
        ->required();
    cmd_train->add_option("--restarts", train_cfg.restarts)->capture_default_str();
    cmd_train->add_option("--max-iters", train_cfg.max_iters)->capture_default_str();
    cmd_train->add_option("--rel-tol", train_cfg.rel_tol)->capture_default_str();
    cmd_train->add_option("--seed", train_cfg.seed)->capture_default_str();
    cmd_train->add_option("--threads", train_cfg.threads,
                          "worker threads (0 = all cores)");
    cmd_train->add_option("--vocab", train_vocab,
                          "vocabulary sidecar fixing entity ids");
    cmd_train->add_option("--trace", train_trace,
                          "write per-iteration likelihood CSV of the winning run");

    // ---- select ----
    auto* cmd_select = app.add_subcommand("select", "AIC sweep over cluster counts");
    fs::path select_in, select_out, select_vocab;
    std::string select_kind = "immsbm";
    std::vector<std::size_t> select_Ts;
    immsbm::TrainConfig select_cfg;
    select_cfg.threads = default_threads();
    bool select_symmetric_aic = false;
    cmd_select->add_option("train", select_in, "training triplet TSV")->required();
    cmd_select->add_option("-o,--out", select_out, "output AIC CSV")->required();
    cmd_select->add_option("--T-list", select_Ts, "candidate cluster counts")
        ->required()
        ->delimiter(',');
    cmd_select->add_option("--model", select_kind, "immsbm|mmsbm")
        ->check(CLI::IsMember({"immsbm", "mmsbm"}))
        ->capture_default_str();
    cmd_select->add_option("--restarts", select_cfg.restarts)->capture_default_str();
    cmd_select->add_option("--max-iters", select_cfg.max_iters)->capture_default_str();
    cmd_select->add_option("--rel-tol", select_cfg.rel_tol)->capture_default_str();
    cmd_select->add_option("--seed", select_cfg.seed)->capture_default_str();
    cmd_select->add_option("--threads", select_cfg.threads);
    cmd_select->add_option("--vocab", select_vocab);
    cmd_select->add_flag("--symmetric-aic", select_symmetric_aic,
                         "count symmetric p fibers once in the AIC");

    // ---- eval ----
    auto* cmd_eval = app.add_subcommand("eval", "Score a model or baseline on a test set");
    fs::path eval_model, eval_test, eval_train, eval_out, eval_curve;
    std::string eval_baseline, eval_patk = "min";
    bool eval_naive_from_test = false, eval_per_pair_auc = false;
    cmd_eval->add_option("test", eval_test, "test triplet TSV")->required();
    cmd_eval->add_option("-m,--model", eval_model, "model JSON to score");
    cmd_eval->add_option("--baseline", eval_baseline, "score a baseline instead")
        ->check(CLI::IsMember({"naive", "upper"}));
    cmd_eval->add_option("--train", eval_train,
                         "training TSV (frequencies for the naive baseline)");
    cmd_eval->add_flag("--naive-from-test", eval_naive_from_test,
                       "fit the naive baseline on the test set itself");
    cmd_eval->add_option("--patk-denominator", eval_patk, "min|k")
        ->check(CLI::IsMember({"min", "k"}))
        ->capture_default_str();
    cmd_eval->add_flag("--per-pair-auc", eval_per_pair_auc,
                       "average AUC per pair instead of pooling");
    cmd_eval->add_option("-o,--out", eval_out, "output report JSON")->required();
    cmd_eval->add_option("--curve", eval_curve, "threshold curve CSV");

    // ---- analyze ----
    auto* cmd_analyze = app.add_subcommand(
        "analyze", "Interaction importance and membership entropy report");
    fs::path analyze_model, analyze_train, analyze_out, analyze_vmatrix,
        analyze_clusters;
    double analyze_threshold = 0.5;
    cmd_analyze->add_option("-m,--model", analyze_model, "trained immsbm JSON")
        ->required();
    cmd_analyze->add_option("train", analyze_train, "training triplet TSV")
        ->required();
    cmd_analyze->add_option("-o,--out", analyze_out, "output report JSON")
        ->required();
    cmd_analyze->add_option("--vmatrix", analyze_vmatrix,
                            "cluster-pair contribution CSV (k,l,value)");
    cmd_analyze->add_option("--clusters", analyze_clusters,
                            "cluster composition text report");
    cmd_analyze->add_option("--membership-threshold", analyze_threshold)
        ->capture_default_str();

    // ---- generate ----
    auto* cmd_generate = app.add_subcommand(
        "generate", "Sample a synthetic dataset with known parameters");
    fs::path gen_dir, gen_spec_path;
    immsbm::GeneratorSpec gen_spec;
    bool gen_noninteracting = false, gen_averaged = false;
    cmd_generate->add_option("-o,--out-dir", gen_dir, "output directory")->required();
    cmd_generate->add_option("--spec", gen_spec_path, "generator spec JSON");
    cmd_generate->add_option("--inputs", gen_spec.I)->capture_default_str();
    cmd_generate->add_option("--outputs", gen_spec.O)->capture_default_str();
    cmd_generate->add_option("-T,--clusters", gen_spec.T)->capture_default_str();
    cmd_generate->add_option("--samples", gen_spec.samples)->capture_default_str();
    cmd_generate->add_option("--seed", gen_spec.seed)->capture_default_str();
    cmd_generate->add_flag("--noninteracting", gen_noninteracting,
                           "constant p fibers: interactions carry no signal");
    cmd_generate->add_flag("--averaged-noninteracting", gen_averaged,
                           "p_{k,l} = (q_k + q_l)/2 with distinct q_k");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*cmd_expand) {
            ManifestWriter mw("expand", argc, argv);
            mw.input("messages", expand_in);
            std::vector<immsbm::MessageRecord> records =
                expand_window > 0 ? load_windowed(expand_in, expand_window)
                                  : immsbm::load_messages(expand_in);
            auto ds = immsbm::expand_messages(records);
            immsbm::save_triplets(ds, expand_out);
            mw.output("triplets", expand_out);
            mw.manifest["records"] = records.size();
            mw.manifest["unique_triplets"] = ds.num_unique();
            mw.manifest["total_weight"] = ds.total_weight();
            mw.write(manifest_path_for(expand_out));
        } else if (*cmd_split) {
            ManifestWriter mw("split", argc, argv);
            mw.input("messages", split_in);
            mw.manifest["seed"] = split_seed;
            auto records = immsbm::load_messages(split_in);
            auto result = immsbm::split(records, split_fraction, split_seed);
            fs::create_directories(split_dir);
            immsbm::save_triplets(result.train, split_dir / "train.tsv");
            immsbm::save_triplets(result.test, split_dir / "test.tsv");
            immsbm::save_vocab(result.train.vocab(), split_dir / "vocab.tsv");
            mw.output("train", split_dir / "train.tsv");
            mw.output("test", split_dir / "test.tsv");
            mw.output("vocab", split_dir / "vocab.tsv");
            mw.manifest["train_records"] = records.size() - result.test_indices.size();
            mw.manifest["test_records"] = result.test_indices.size();
            mw.write(split_dir / "manifest.json");
        } else if (*cmd_train) {
            ManifestWriter mw("train", argc, argv);
            mw.input("train", train_in);
            mw.manifest["seed"] = train_cfg.seed;
            mw.manifest["config"] = {{"T", train_cfg.T},
                                     {"restarts", train_cfg.restarts},
                                     {"max_iters", train_cfg.max_iters},
                                     {"rel_tol", train_cfg.rel_tol},
                                     {"model", train_kind}};
            std::optional<immsbm::Vocabulary> vocab;
            if (!train_vocab.empty()) vocab = immsbm::load_vocab(train_vocab);
            auto data = immsbm::load_triplets(train_in, vocab);
            immsbm::TrainTrace trace;
            if (train_kind == "immsbm") {
                auto [model, tr] = immsbm::train(data, train_cfg);
                immsbm::save_model(model, train_out);
                trace = std::move(tr);
            } else {
                auto [model, tr] = immsbm::mmsbm_train(data, train_cfg);
                immsbm::save_model(model, train_out);
                trace = std::move(tr);
            }
            mw.output("model", train_out);
            const auto& best = trace.restarts[trace.chosen];
            mw.manifest["chosen_restart"] = trace.chosen;
            mw.manifest["final_loglik"] = best.final_loglik;
            mw.manifest["iterations"] = best.loglik.size();
            if (!train_trace.empty()) {
                write_trace_csv(best, train_trace);
                mw.output("trace", train_trace);
            }
            mw.write(manifest_path_for(train_out));
            std::cout << "loglik " << best.final_loglik << " after "
                      << best.loglik.size() << " iterations (restart "
                      << trace.chosen << ")\n";
        } else if (*cmd_select) {
            ManifestWriter mw("select", argc, argv);
            mw.input("train", select_in);
            select_cfg.symmetric_aic = select_symmetric_aic;
            std::optional<immsbm::Vocabulary> vocab;
            if (!select_vocab.empty()) vocab = immsbm::load_vocab(select_vocab);
            auto data = immsbm::load_triplets(select_in, vocab);
            immsbm::AicTable table =
                select_kind == "immsbm"
                    ? immsbm::select_clusters(data, select_Ts, select_cfg)
                    : immsbm::mmsbm_select_clusters(data, select_Ts, select_cfg);
            std::ostringstream out;
            out << "T,loglik,aic\n";
            for (const auto& row : table.rows)
                out << row.T << ',' << csv_double(row.loglik) << ','
                    << csv_double(row.aic) << '\n';
            immsbm::atomic_write(select_out, out.str());
            mw.output("aic_table", select_out);
            mw.manifest["chosen_T"] = table.best_T;
            mw.write(manifest_path_for(select_out));
            std::cout << "chosen T " << table.best_T << "\n";
        } else if (*cmd_eval) {
            ManifestWriter mw("eval", argc, argv);
            mw.input("test", eval_test);
            immsbm::EvalOptions options;
            options.patk_denominator = eval_patk == "k"
                                           ? immsbm::PatkDenominator::kK
                                           : immsbm::PatkDenominator::kMin;
            options.per_pair_auc = eval_per_pair_auc;

            immsbm::Predictor predictor;
            immsbm::TripletDataset test;
            std::size_t unknown_pairs = 0;
            if (!eval_baseline.empty()) {
                if (eval_baseline == "naive") {
                    immsbm::TripletDataset fit_on;
                    if (eval_naive_from_test) {
                        test = immsbm::load_triplets(eval_test);
                        fit_on = test;
                    } else {
                        if (eval_train.empty())
                            throw immsbm::DataError(
                                "naive baseline needs --train (or --naive-from-test)");
                        mw.input("naive_train", eval_train);
                        auto train_ds = immsbm::load_triplets(eval_train);
                        test = immsbm::load_triplets(eval_test, train_ds.vocab());
                        fit_on = std::move(train_ds);
                    }
                    auto table =
                        std::make_shared<immsbm::FrequencyTable>(
                            immsbm::FrequencyTable::fit(fit_on));
                    predictor = [table](immsbm::EntityId i, immsbm::EntityId j) {
                        return table->predict(i, j);
                    };
                } else { // upper
                    test = immsbm::load_triplets(eval_test);
                    auto upper = std::make_shared<immsbm::UpperLimit>(
                        immsbm::UpperLimit::fit(test));
                    auto counter = std::make_shared<std::size_t>(0);
                    predictor = [upper, counter](immsbm::EntityId i,
                                                 immsbm::EntityId j) {
                        bool known = true;
                        auto v = upper->predict(i, j, &known);
                        if (!known) ++*counter;
                        return v;
                    };
                    mw.manifest["baseline"] = "upper";
                }
            } else {
                if (eval_model.empty())
                    throw immsbm::DataError("eval needs --model or --baseline");
                mw.input("model", eval_model);
                std::string kind = immsbm::model_kind(eval_model);
                if (kind == "immsbm") {
                    auto model = std::make_shared<immsbm::ImmsbmModel>(
                        immsbm::load_immsbm(eval_model));
                    test = load_for_model(eval_test, model->vocab);
                    predictor = [model](immsbm::EntityId i, immsbm::EntityId j) {
                        return model->predict_pair(i, j);
                    };
                } else {
                    auto model = std::make_shared<immsbm::MmsbmModel>(
                        immsbm::load_mmsbm(eval_model));
                    test = load_for_model(eval_test, model->vocab);
                    predictor = [model](immsbm::EntityId i, immsbm::EntityId j) {
                        return model->predict_pair(i, j);
                    };
                }
            }
            immsbm::EvalReport report = immsbm::evaluate(predictor, test, options);
            json out = report_to_json(report);
            out["unknown_pairs"] = unknown_pairs;
            out["symmetry_fixes"] = test.symmetry_fixes();
            immsbm::atomic_write(eval_out, out.dump(2) + "\n");
            mw.output("report", eval_out);
            if (!eval_curve.empty()) {
                write_curve(report.curve, eval_curve);
                mw.output("curve", eval_curve);
            }
            mw.write(manifest_path_for(eval_out));
            std::cout << "max_f1 " << report.max_f1 << " auc " << report.auc_roc
                      << " p@10 " << report.precision_at_10 << "\n";
        } else if (*cmd_analyze) {
            ManifestWriter mw("analyze", argc, argv);
            mw.input("model", analyze_model);
            mw.input("train", analyze_train);
            auto model = immsbm::load_immsbm(analyze_model);
            auto data = immsbm::load_triplets(analyze_train, model.vocab);
            immsbm::InteractionReport report = immsbm::analyze(model, data);
            json out{{"v_bar", report.v_bar},
                     {"interaction_factor", report.interaction_factor},
                     {"skipped_triplets", report.skipped_triplets},
                     {"v_matrix", report.v_matrix},
                     {"entropies", report.entropies},
                     {"mean_entropy", report.mean_entropy}};
            immsbm::atomic_write(analyze_out, out.dump(2) + "\n");
            mw.output("report", analyze_out);
            if (!analyze_vmatrix.empty()) {
                std::ostringstream csv;
                csv << "k,l,value\n";
                for (std::size_t k = 0; k < model.T; ++k)
                    for (std::size_t l = 0; l < model.T; ++l)
                        csv << k << ',' << l << ','
                            << csv_double(report.v_matrix[k * model.T + l]) << '\n';
                immsbm::atomic_write(analyze_vmatrix, csv.str());
                mw.output("vmatrix", analyze_vmatrix);
            }
            if (!analyze_clusters.empty()) {
                std::ostringstream txt;
                auto clusters = immsbm::cluster_report(model, analyze_threshold);
                for (std::size_t k = 0; k < clusters.size(); ++k) {
                    txt << "cluster " << k << " (" << clusters[k].size()
                        << " entities >= " << analyze_threshold << ")\n";
                    for (const auto& m : clusters[k])
                        txt << "  " << m.label << '\t' << m.membership << '\n';
                }
                immsbm::atomic_write(analyze_clusters, txt.str());
                mw.output("clusters", analyze_clusters);
            }
            mw.write(manifest_path_for(analyze_out));
            std::cout << "v_bar " << report.v_bar << " mean_entropy "
                      << report.mean_entropy << "\n";
        } else if (*cmd_generate) {
            ManifestWriter mw("generate", argc, argv);
            if (!gen_spec_path.empty()) {
                json j = json::parse(immsbm::read_file(gen_spec_path));
                gen_spec.I = j.value("I", gen_spec.I);
                gen_spec.O = j.value("O", gen_spec.O);
                gen_spec.T = j.value("T", gen_spec.T);
                gen_spec.samples = j.value("samples", gen_spec.samples);
                gen_spec.seed = j.value("seed", gen_spec.seed);
                if (j.contains("theta"))
                    gen_spec.theta = j.at("theta").get<std::vector<double>>();
                if (j.contains("p"))
                    gen_spec.p = j.at("p").get<std::vector<double>>();
                if (j.value("pair_distribution", "uniform") == "powerlaw")
                    gen_spec.pair_distribution = immsbm::PairDistribution::kPowerLaw;
                gen_spec.power_law_exponent =
                    j.value("power_law_exponent", gen_spec.power_law_exponent);
                mw.input("spec", gen_spec_path);
            }
            if (gen_noninteracting)
                gen_spec = immsbm::make_noninteracting(gen_spec, true);
            else if (gen_averaged)
                gen_spec = immsbm::make_noninteracting(gen_spec, false);
            mw.manifest["seed"] = gen_spec.seed;
            auto [data, truth] = immsbm::generate(gen_spec);
            fs::create_directories(gen_dir);
            immsbm::save_triplets(data, gen_dir / "triplets.tsv");
            immsbm::save_model(truth, gen_dir / "truth.json");
            immsbm::save_vocab(data.vocab(), gen_dir / "vocab.tsv");
            mw.output("triplets", gen_dir / "triplets.tsv");
            mw.output("truth", gen_dir / "truth.json");
            mw.output("vocab", gen_dir / "vocab.tsv");
            mw.manifest["unique_triplets"] = data.num_unique();
            mw.manifest["total_weight"] = data.total_weight();
            mw.write(gen_dir / "manifest.json");
        }
    } catch (const immsbm::DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 3;
    } catch (const immsbm::NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
