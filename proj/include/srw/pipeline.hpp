#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srw/cifar.hpp"
#include "srw/data.hpp"
#include "srw/losses.hpp"
#include "srw/nn/checkpoint.hpp"
#include "srw/nn/model.hpp"
#include "srw/radar/dataset.hpp"
#include "srw/shap_explain.hpp"
#include "srw/weighting.hpp"

namespace srw::pipeline {

struct TrainSettings {
    int batch_size = 18;
    int epochs = 30;
    int patience = 5;
    bool stability = false;
    double sigma = 0.01;
    bool true_kl = false;             // Lstable_class variant
    std::string metric_loss = "lar";  // "lar" | "hinge"
    int triplet_cap = 512;
    bool augment = false;             // retraining sessions turn this on
    double flip_prob = 0.1;
    int max_shift = 5;
};

void to_json(nlohmann::json& j, const TrainSettings& t);
void from_json(const nlohmann::json& j, TrainSettings& t);

struct ShapSettings {
    int block_rows = 8;
    int block_cols = 8;
    bool per_channel = true;
    std::string mode = "sampled";
    int permutations = 20;
    bool explain_logit = false;
    int eval_batch = 128;
};

void to_json(nlohmann::json& j, const ShapSettings& s);
void from_json(const nlohmann::json& j, ShapSettings& s);

struct DataSettings {
    std::string source = "radar-sim";  // "radar-sim" | "image-files"
    radar::RadarConfig radar;
    radar::SceneSpec scene;
    int baseline_count = 3000;
    int validation_count = 600;
    int test_count = 600;
    int eval_count = 600;  // per session
    // image-files mode
    std::vector<std::string> train_files, test_files;
};

void to_json(nlohmann::json& j, const DataSettings& d);
void from_json(const nlohmann::json& j, DataSettings& d);

struct RunConfig {
    DataSettings data;
    nn::ArchitectureDescriptor model;
    nn::AdamConfig optimizer;
    TrainSettings train;
    std::string weighting_method = "none";  // none | softmax | masked | localize
    double weight_floor = 0.05;
    ShapSettings shap;
    int sessions = 2;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency

    std::uint64_t config_hash() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::string& path);

// Generates (radar) or loads (image) the dataset with all splits for the
// configured session count.
Dataset build_dataset(const RunConfig& cfg, std::uint64_t data_seed, int threads);

struct StepMetrics {
    std::int64_t step = 0;
    losses::LossBreakdown breakdown;
};

void save_metrics_csv(const std::vector<StepMetrics>& rows, const std::string& path);

struct TrainResult {
    nn::Model<float> model;  // best-validation checkpoint
    std::vector<StepMetrics> metrics;
    int best_epoch = -1;
    double best_val_accuracy = 0.0;
    int epochs_run = 0;
};

// Weighted (optionally stability) training with early stopping on validation
// accuracy. `forbidden_ids` is the test-leak audit: any batch containing one
// of these ids aborts. Weight lookups fall back to 1 for ids missing from the
// table only if the table is empty (plain baseline training).
TrainResult train(const nn::Model<float>& start, const std::vector<const Sample*>& data,
                  const weighting::WeightTable& weights, const std::vector<const Sample*>& valid,
                  const RunConfig& cfg, std::uint64_t run_seed,
                  const std::set<std::uint64_t>& forbidden_ids);

struct EvalReport {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    std::vector<std::vector<int>> confusion;  // [true][predicted]
    int count = 0;
};

EvalReport evaluate(const nn::Model<float>& model, const std::vector<const Sample*>& testset,
                    int num_classes, int threads = 1);

struct WrongSample {
    const Sample* sample = nullptr;
    int predicted = 0;
    std::vector<double> probabilities;
};

// Exactly the misclassified samples of the evaluation set, with the model's
// predicted class and probability vector attached.
std::vector<WrongSample> select_wrong(const nn::Model<float>& model,
                                      const std::vector<const Sample*>& eval_set, int threads = 1);

struct SessionReport {
    int session = 0;  // 0 = baseline evaluation
    std::string arm;
    EvalReport eval;
    double mean_weight = 1.0, min_weight = 1.0, max_weight = 1.0;
    int train_size = 0;
    int harvested = 0;  // |D^{I_i}|
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

// Algorithm: session i selects the wrong samples of eval set i with the
// current model, computes their weights per the configured method, extends
// the training set, warm-starts from the previous checkpoint, trains and
// evaluates on the untouched test split. Checkpoints, weight tables and
// per-step metrics are persisted under out_dir.
std::vector<SessionReport> retrain_incremental(const nn::Model<float>& baseline,
                                               const Dataset& dataset, const RunConfig& cfg,
                                               std::uint64_t run_seed, const std::string& out_dir,
                                               int threads);

struct MatrixArm {
    std::string method;
    bool stability = false;

    std::string name() const { return method + (stability ? "+stability" : ""); }
};

struct MatrixRow {
    int session = 0;
    std::string arm;
    int repeat = 0;
    double accuracy = 0.0;
};

struct MatrixReport {
    std::vector<MatrixRow> rows;
    double wall_seconds = 0.0;
};

// Full experiment grid: every (arm x repeat) retraining shares the repeat's
// dataset and baseline checkpoint (the baseline does not depend on the arm).
// Arms run concurrently in isolated output directories. Emits report.csv,
// summary.csv and a plot script under out_dir.
MatrixReport run_experiment_matrix(const RunConfig& cfg, const std::vector<MatrixArm>& arms,
                                   int n_repeats, const std::string& out_dir);

void save_matrix_report(const MatrixReport& report, const std::vector<MatrixArm>& arms,
                        int n_repeats, int sessions, const std::string& out_dir);

// Run manifest: config hash, seeds, input hashes, artifact version.
void write_manifest(const RunConfig& cfg, const std::vector<std::string>& input_files,
                    const std::string& path);

}  // namespace srw::pipeline
