// srw: SHAP-weighted incremental retraining pipeline.
//
// Subcommands: simulate, train-baseline, retrain, explain, evaluate, report,
// matrix. Exit codes: 0 success, 1 usage error, 2 data/config error,
// 3 numeric failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srw/error.hpp"
#include "srw/io.hpp"
#include "srw/parallel.hpp"
#include "srw/pipeline.hpp"
#include "srw/version.hpp"

namespace fs = std::filesystem;
using namespace srw;

namespace {

struct GlobalOpts {
    std::string workdir;
    int threads = 0;
    bool has_seed_override = false;
    std::uint64_t seed_override = 0;
};

void apply_env_overrides(GlobalOpts& g) {
    if (const char* s = std::getenv("SRW_SEED")) {
        g.has_seed_override = true;
        g.seed_override = std::strtoull(s, nullptr, 10);
    }
    if (const char* t = std::getenv("SRW_THREADS")) g.threads = std::atoi(t);
}

pipeline::RunConfig load_config(const std::string& path, const GlobalOpts& g) {
    pipeline::RunConfig cfg = pipeline::load_run_config(path);
    if (g.has_seed_override) cfg.seed = g.seed_override;
    if (g.threads > 0) cfg.threads = g.threads;
    std::fprintf(stderr, "[srw] version %s config %016llx seed %llu threads %d\n", kVersion,
                 static_cast<unsigned long long>(cfg.config_hash()),
                 static_cast<unsigned long long>(cfg.seed), resolve_threads(cfg.threads));
    return cfg;
}

std::vector<const Sample*> split_view(const Dataset& ds, std::uint8_t origin_tag) {
    std::vector<const Sample*> out;
    for (const auto& s : ds.samples)
        if (s.origin == origin_tag) out.push_back(&s);
    return out;
}

void check_model_matches(const pipeline::RunConfig& cfg, const nn::Model<float>& model) {
    nlohmann::json a = cfg.model, b = model.desc;
    if (a != b)
        throw DataError("checkpoint architecture does not match the config's model section");
}

void check_dataset_matches(const pipeline::RunConfig& cfg, const Dataset& ds) {
    if (ds.num_classes() != cfg.model.num_classes)
        throw DataError("dataset has " + std::to_string(ds.num_classes()) +
                        " classes but the model expects " + std::to_string(cfg.model.num_classes));
}

void print_eval(const pipeline::EvalReport& rep) {
    std::printf("accuracy %.4f over %d samples\n", rep.accuracy, rep.count);
    std::printf("confusion (rows = true label):\n");
    for (const auto& row : rep.confusion) {
        for (int v : row) std::printf("%6d", v);
        std::printf("\n");
    }
}

void write_session_report_csv(const std::vector<pipeline::SessionReport>& reports,
                              const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    os << "session,arm,repeat,accuracy\n";
    char buf[160];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%d,%s,0,%.6f\n", r.session, r.arm.c_str(),
                      r.eval.accuracy);
        os << buf;
    }
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 const GlobalOpts& g) {
    pipeline::RunConfig cfg = load_config(config_path, g);
    Dataset ds = pipeline::build_dataset(cfg, cfg.seed, resolve_threads(cfg.threads));
    save_dataset(ds, out);
    pipeline::write_manifest(cfg, {config_path}, out + ".manifest.json");
    std::printf("wrote %zu samples to %s\n", ds.samples.size(), out.c_str());
    return 0;
}

int cmd_train_baseline(const std::string& config_path, const std::string& data_path,
                       const std::string& out_dir, const GlobalOpts& g) {
    pipeline::RunConfig cfg = load_config(config_path, g);
    Dataset ds = load_dataset(data_path);
    check_dataset_matches(cfg, ds);
    fs::create_directories(out_dir);

    pipeline::RunConfig bcfg = cfg;
    bcfg.train.stability = false;
    bcfg.train.augment = false;
    auto train_set = split_view(ds, origin::kBaseline);
    auto valid = split_view(ds, origin::kValidation);
    auto test = split_view(ds, origin::kTest);
    std::set<std::uint64_t> test_ids;
    for (const auto* s : test) test_ids.insert(s->id);

    nn::Model<float> init = nn::build_model<float>(cfg.model, derive_seed(cfg.seed, 4000));
    pipeline::TrainResult tr = pipeline::train(init, train_set, weighting::WeightTable{}, valid,
                                               bcfg, derive_seed(cfg.seed, 0xBA5E), test_ids);
    nn::save_checkpoint(tr.model, out_dir + "/baseline.ckpt");
    pipeline::save_metrics_csv(tr.metrics, out_dir + "/metrics.csv");
    pipeline::write_manifest(cfg, {config_path, data_path}, out_dir + "/manifest.json");

    const auto rep = pipeline::evaluate(tr.model, test, cfg.model.num_classes,
                                        resolve_threads(cfg.threads));
    std::printf("baseline: best val %.4f (epoch %d), test ", tr.best_val_accuracy, tr.best_epoch);
    print_eval(rep);
    return 0;
}

int cmd_retrain(const std::string& config_path, const std::string& data_path,
                const std::string& baseline_path, const std::string& method, bool stability,
                double sigma, const std::string& out_dir, const GlobalOpts& g) {
    pipeline::RunConfig cfg = load_config(config_path, g);
    cfg.weighting_method = method;
    cfg.train.stability = stability;
    if (sigma > 0) cfg.train.sigma = sigma;

    Dataset ds = load_dataset(data_path);
    check_dataset_matches(cfg, ds);
    nn::Model<float> baseline = nn::load_checkpoint<float>(baseline_path);
    check_model_matches(cfg, baseline);

    const auto reports = pipeline::retrain_incremental(baseline, ds, cfg,
                                                       derive_seed(cfg.seed, 3000), out_dir,
                                                       resolve_threads(cfg.threads));
    write_session_report_csv(reports, out_dir + "/report.csv");
    pipeline::write_manifest(cfg, {config_path, data_path, baseline_path},
                             out_dir + "/manifest.json");
    for (const auto& r : reports)
        std::printf("session %d (%s): accuracy %.4f, train size %d, harvested %d\n", r.session,
                    r.arm.c_str(), r.eval.accuracy, r.train_size, r.harvested);
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& split, const GlobalOpts& g) {
    std::fprintf(stderr, "[srw] version %s threads %d\n", kVersion, resolve_threads(g.threads));
    nn::Model<float> model = nn::load_checkpoint<float>(model_path);
    Dataset ds = load_dataset(data_path);
    const auto view = split_view(ds, origin::from_name(split));
    if (view.empty()) throw DataError("split '" + split + "' is empty in " + data_path);
    const auto rep = pipeline::evaluate(model, view, model.desc.num_classes,
                                        resolve_threads(g.threads));
    print_eval(rep);
    return 0;
}

int cmd_explain(const std::string& model_path, const std::string& data_path,
                const std::string& out, const std::string& mode, int perms, std::uint64_t seed,
                const std::string& split, const GlobalOpts& g) {
    std::fprintf(stderr, "[srw] version %s seed %llu threads %d\n", kVersion,
                 static_cast<unsigned long long>(seed), resolve_threads(g.threads));
    nn::Model<float> model = nn::load_checkpoint<float>(model_path);
    Dataset ds = load_dataset(data_path);
    const auto view = split_view(ds, origin::from_name(split));
    if (view.empty()) throw DataError("split '" + split + "' is empty in " + data_path);

    const auto wrong = pipeline::select_wrong(model, view, resolve_threads(g.threads));
    if (wrong.empty()) {
        std::printf("no misclassified samples in split '%s'; nothing to explain\n", split.c_str());
        return 0;
    }
    std::vector<const Sample*> samples;
    std::vector<int> predicted;
    for (const auto& w : wrong) {
        samples.push_back(w.sample);
        predicted.push_back(w.predicted);
    }
    auto baseline_view = split_view(ds, origin::kBaseline);
    if (baseline_view.empty()) baseline_view = view;
    Tensor<float> background(samples.front()->x.shape);
    {
        std::vector<double> acc(background.numel(), 0.0);
        for (const auto* s : baseline_view)
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s->x.data[i];
        for (std::size_t i = 0; i < acc.size(); ++i)
            background.data[i] = static_cast<float>(acc[i] / static_cast<double>(baseline_view.size()));
    }

    shap::ExplainConfig ecfg;
    ecfg.mode = mode;
    ecfg.permutations = perms;
    ecfg.seed = seed;
    ecfg.threads = resolve_threads(g.threads);
    const auto exps = shap::explain_wrong_samples(model, samples, predicted, background, ecfg);
    const auto& shape = samples.front()->x.shape;
    shap::save_explanations(exps, static_cast<int>(shape[0]), static_cast<int>(shape[1]),
                            static_cast<int>(shape[2]), ecfg, out);
    {
        nlohmann::json m;
        m["artifact_version"] = kVersion;
        m["mode"] = mode;
        m["permutations"] = perms;
        m["seed"] = seed;
        m["split"] = split;
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(hash_file(model_path)));
        m["input_hashes"][model_path] = hex;
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(hash_file(data_path)));
        m["input_hashes"][data_path] = hex;
        write_text_file(out + ".manifest.json", m.dump(2) + "\n");
    }
    std::printf("explained %zu misclassified samples -> %s\n", exps.size(), out.c_str());
    return 0;
}

int cmd_report(const std::string& runs_csv, const std::string& out_dir) {
    std::ifstream is(runs_csv);
    if (!is) throw DataError("cannot open " + runs_csv);
    std::string line;
    std::getline(is, line);
    struct Key {
        std::string arm;
        int session;
        bool operator<(const Key& o) const {
            return arm != o.arm ? arm < o.arm : session < o.session;
        }
    };
    std::map<Key, std::vector<double>> groups;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string session_s, arm, repeat_s, acc_s;
        std::getline(ss, session_s, ',');
        std::getline(ss, arm, ',');
        std::getline(ss, repeat_s, ',');
        std::getline(ss, acc_s, ',');
        groups[{arm, std::stoi(session_s)}].push_back(std::stod(acc_s));
    }
    fs::create_directories(out_dir);
    std::ofstream os(out_dir + "/summary.csv");
    os << "arm,session,mean_accuracy,std_accuracy,runs\n";
    std::printf("%-24s %8s %10s %10s %6s\n", "arm", "session", "mean", "std", "runs");
    for (const auto& [key, accs] : groups) {
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        var = accs.size() > 1 ? var / static_cast<double>(accs.size() - 1) : 0.0;
        char buf[200];
        std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%zu\n", key.arm.c_str(), key.session,
                      mean, std::sqrt(var), accs.size());
        os << buf;
        std::printf("%-24s %8d %10.4f %10.4f %6zu\n", key.arm.c_str(), key.session, mean,
                    std::sqrt(var), accs.size());
    }
    return 0;
}

int cmd_matrix(const std::string& config_path, const std::string& out_dir,
               const std::string& methods_csv, bool with_stability, int repeats,
               const GlobalOpts& g) {
    pipeline::RunConfig cfg = load_config(config_path, g);
    std::vector<pipeline::MatrixArm> arms;
    std::istringstream ss(methods_csv);
    std::string m;
    while (std::getline(ss, m, ',')) {
        if (m.empty()) continue;
        weighting::method_from_string(m);  // validates
        arms.push_back({m, false});
        if (with_stability) arms.push_back({m, true});
    }
    if (arms.empty()) throw UsageError("matrix: no methods given");
    const auto report = pipeline::run_experiment_matrix(cfg, arms, repeats, out_dir);
    std::printf("matrix finished in %.1f s; %zu report rows -> %s\n", report.wall_seconds,
                report.rows.size(), (out_dir + "/report.csv").c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SHAP-weighted incremental retraining for radar people counting"};
    app.require_subcommand(1);
    GlobalOpts g;
    app.add_option("--workdir", g.workdir, "Directory that all relative paths resolve against");
    app.add_option("--threads", g.threads, "Worker threads for sample-parallel stages (0 = cores)");

    std::string config_path, data_path, out_path, out_dir, model_path, baseline_path;
    std::string method = "none", split = "test", mode = "sampled";
    std::string methods_csv = "none,softmax,masked,localize", runs_csv;
    bool stability = false, with_stability = false;
    double sigma = 0.0;
    int perms = 2000, repeats = 3;
    std::uint64_t seed = 0;

    auto* sim = app.add_subcommand("simulate", "Generate a dataset file from a config");
    sim->add_option("--config", config_path)->required();
    sim->add_option("--out", out_path)->required();
    sim->add_option("--seed", seed);

    auto* tb = app.add_subcommand("train-baseline", "Train the baseline model");
    tb->add_option("--config", config_path)->required();
    tb->add_option("--data", data_path)->required();
    tb->add_option("--out-dir", out_dir)->required();

    auto* rt = app.add_subcommand("retrain", "Run incremental weighted retraining sessions");
    rt->add_option("--config", config_path)->required();
    rt->add_option("--data", data_path)->required();
    rt->add_option("--baseline", baseline_path)->required();
    rt->add_option("--method", method, "none|softmax|masked|localize");
    rt->add_flag("--stability", stability, "Train sessions with the stability loss");
    rt->add_option("--sigma", sigma, "Stability noise std");
    rt->add_option("--out-dir", out_dir)->required();

    auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset split");
    ev->add_option("--model", model_path)->required();
    ev->add_option("--data", data_path)->required();
    ev->add_option("--split", split);

    auto* ex = app.add_subcommand("explain", "SHAP maps for misclassified samples of a split");
    ex->add_option("--model", model_path)->required();
    ex->add_option("--data", data_path)->required();
    ex->add_option("--out", out_path)->required();
    ex->add_option("--mode", mode, "exact|sampled");
    ex->add_option("--perms", perms);
    ex->add_option("--seed", seed);
    ex->add_option("--split", split);

    auto* rp = app.add_subcommand("report", "Aggregate a report.csv into per-arm summaries");
    rp->add_option("--runs", runs_csv)->required();
    rp->add_option("--out-dir", out_dir)->required();

    auto* mx = app.add_subcommand("matrix", "Run the full (method x stability) experiment grid");
    mx->add_option("--config", config_path)->required();
    mx->add_option("--out-dir", out_dir)->required();
    mx->add_option("--methods", methods_csv, "Comma-separated weighting methods");
    mx->add_flag("--with-stability", with_stability, "Add a stability arm per method");
    mx->add_option("--repeats", repeats);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        apply_env_overrides(g);
        if (seed != 0) {
            g.has_seed_override = true;
            g.seed_override = seed;
        }
        if (!g.workdir.empty()) fs::current_path(g.workdir);

        if (sim->parsed()) return cmd_simulate(config_path, out_path, g);
        if (tb->parsed()) return cmd_train_baseline(config_path, data_path, out_dir, g);
        if (rt->parsed())
            return cmd_retrain(config_path, data_path, baseline_path, method, stability, sigma,
                               out_dir, g);
        if (ev->parsed()) return cmd_evaluate(model_path, data_path, split, g);
        if (ex->parsed())
            return cmd_explain(model_path, data_path, out_path, mode, perms, seed, split, g);
        if (rp->parsed()) return cmd_report(runs_csv, out_dir);
        if (mx->parsed())
            return cmd_matrix(config_path, out_dir, methods_csv, with_stability, repeats, g);
        throw UsageError("no subcommand");
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
