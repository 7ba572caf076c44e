// Exercises the installed binary end to end: exit codes, file outputs, env
// overrides. The CLI path arrives as argv[1] from CMake.
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "srw/io.hpp"
#include "srw/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        ++failures;
        std::cerr << "[FAIL] " << what << "\n";
    } else {
        std::cout << "[ ok ] " << what << "\n";
    }
}

std::string g_cli;
const std::string kDir = "/tmp/srw_cli_test";

int run(const std::string& args, const std::string& out_file = "/dev/null") {
    const std::string cmd = g_cli + " " + args + " >" + out_file + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int run_env(const std::string& env, const std::string& args) {
    const std::string cmd = env + " " + g_cli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

srw::pipeline::RunConfig small_config() {
    srw::pipeline::RunConfig cfg;
    cfg.data.radar.nts = 32;
    cfg.data.radar.pn = 16;
    cfg.data.radar.chirp_s = 16e-6;
    cfg.data.scene.num_classes = 3;
    cfg.data.scene.range_min_m = 0.5;
    cfg.data.scene.range_max_m = 2.0;
    cfg.data.scene.min_range_separation_m = 0.3;
    cfg.data.baseline_count = 45;
    cfg.data.validation_count = 18;
    cfg.data.test_count = 18;
    cfg.data.eval_count = 18;
    cfg.sessions = 1;
    cfg.model.input_rows = 16;
    cfg.model.input_cols = 16;
    cfg.model.input_channels = 4;
    cfg.model.num_classes = 3;
    cfg.model.embedding_dim = 8;
    cfg.model.block_channels = {3, 4, 4};
    cfg.model.cross_channels = {3, 3, 4};
    cfg.train.batch_size = 9;
    cfg.train.epochs = 2;
    cfg.train.max_shift = 3;
    cfg.shap.block_rows = 8;
    cfg.shap.block_cols = 8;
    cfg.shap.permutations = 4;
    cfg.seed = 5;
    cfg.threads = 2;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: test_cli <path-to-srw-binary>\n";
        return 2;
    }
    g_cli = argv[1];
    fs::remove_all(kDir);
    fs::create_directories(kDir);

    check(run("--help") == 0, "--help exits 0");
    check(run("frobnicate") == 1, "unknown subcommand exits 1");
    check(run("retrain") == 1, "missing required flags exit 1");
    check(run("retrain --config /nope.json --data /nope --baseline /nope --out-dir " + kDir) == 2,
          "missing config file exits 2");
    check(run("evaluate --model /nope.ckpt --data /nope.srwd") == 2,
          "missing checkpoint exits 2");

    const std::string cfg_path = kDir + "/config.json";
    {
        nlohmann::json j = small_config();
        srw::write_text_file(cfg_path, j.dump(2));
    }
    const std::string data_path = kDir + "/data.srwd";
    check(run("simulate --config " + cfg_path + " --out " + data_path) == 0, "simulate exits 0");
    check(fs::exists(data_path), "simulate writes the dataset");
    check(fs::exists(data_path + ".manifest.json"), "simulate writes a manifest");

    // Determinism + SRW_SEED override.
    const std::string data2 = kDir + "/data2.srwd";
    check(run("simulate --config " + cfg_path + " --out " + data2) == 0, "simulate again");
    check(srw::hash_file(data_path) == srw::hash_file(data2), "same seed, same dataset bytes");
    const std::string data3 = kDir + "/data3.srwd";
    check(run_env("SRW_SEED=999", "simulate --config " + cfg_path + " --out " + data3) == 0,
          "SRW_SEED override accepted");
    check(srw::hash_file(data_path) != srw::hash_file(data3), "SRW_SEED changes the dataset");

    const std::string base_dir = kDir + "/baseline";
    check(run("train-baseline --config " + cfg_path + " --data " + data_path + " --out-dir " +
              base_dir) == 0,
          "train-baseline exits 0");
    check(fs::exists(base_dir + "/baseline.ckpt"), "baseline checkpoint written");
    check(fs::exists(base_dir + "/metrics.csv"), "baseline metrics written");
    check(fs::exists(base_dir + "/manifest.json"), "baseline manifest written");

    check(run("evaluate --model " + base_dir + "/baseline.ckpt --data " + data_path) == 0,
          "evaluate exits 0");
    check(run_env("SRW_THREADS=1", "evaluate --model " + base_dir + "/baseline.ckpt --data " +
                                       data_path) == 0,
          "SRW_THREADS override accepted");

    const std::string explain_out = kDir + "/maps.srws";
    const std::string explain_log = kDir + "/explain.log";
    check(run("explain --model " + base_dir + "/baseline.ckpt --data " + data_path + " --out " +
              explain_out + " --mode sampled --perms 4 --seed 3 --split validation",
              explain_log) == 0,
          "explain exits 0");
    {
        std::ifstream is(explain_log);
        std::string log((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        check(fs::exists(explain_out) || log.find("nothing to explain") != std::string::npos,
              "explain writes maps or reports a clean split");
    }

    const std::string retrain_dir = kDir + "/retrain";
    check(run("retrain --config " + cfg_path + " --data " + data_path + " --baseline " + base_dir +
              "/baseline.ckpt --method masked --out-dir " + retrain_dir) == 0,
          "retrain exits 0");
    check(fs::exists(retrain_dir + "/report.csv"), "retrain writes report.csv");
    check(fs::exists(retrain_dir + "/weights_session_1.csv"), "retrain persists weight tables");

    check(run("report --runs " + retrain_dir + "/report.csv --out-dir " + kDir + "/agg") == 0,
          "report exits 0");
    check(fs::exists(kDir + "/agg/summary.csv"), "report writes summary.csv");

    // Numeric failure path: an absurd learning rate must abort with exit 3.
    {
        auto cfg = small_config();
        cfg.optimizer.lr = 1e30;
        cfg.train.epochs = 3;
        nlohmann::json j = cfg;
        srw::write_text_file(kDir + "/bad.json", j.dump());
        check(run("train-baseline --config " + kDir + "/bad.json --data " + data_path +
                  " --out-dir " + kDir + "/bad") == 3,
              "NaN loss aborts with exit 3");
    }

    fs::remove_all(kDir);
    if (failures == 0) {
        std::cout << "test_cli: all checks passed\n";
        return 0;
    }
    std::cerr << "test_cli: " << failures << " checks failed\n";
    return 1;
}
