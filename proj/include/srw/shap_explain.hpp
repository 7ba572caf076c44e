#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srw/data.hpp"
#include "srw/nn/model.hpp"
#include "srw/shap.hpp"

namespace srw::shap {

struct ExplainConfig {
    int block_rows = 8;
    int block_cols = 8;
    bool per_channel = true;
    std::string mode = "sampled";  // "exact" | "sampled"
    int permutations = 20;
    bool explain_logit = false;    // default explains the softmax probability
    std::uint64_t seed = 0;
    int eval_batch = 128;
    int threads = 1;
};

// SHAP map pair for one misclassified sample: maps_label explains the ground
// truth class y, maps_predicted explains the wrongly predicted class.
struct WrongSampleExplanation {
    std::uint64_t id = 0;
    int label = 0;
    int predicted = 0;
    ChannelMaps maps_label;
    ChannelMaps maps_predicted;
    double phi0_label = 0.0, phi0_predicted = 0.0;
    double f_label = 0.0, f_predicted = 0.0;  // model output on the unmasked input
    double max_stderr = 0.0;
};

// Batched predictor over the two classes of interest.
PredictFn<float> make_class_predict_fn(const nn::Model<float>& infer_model, int class_a,
                                       int class_b, bool explain_logit);

// Explain every (sample, predicted) pair; rejects pairs with label ==
// predicted. Coalition evaluations for one input share a single pass that
// covers both explained classes. Samples are processed in parallel with
// per-sample seeds derived from (cfg.seed, sample id).
std::vector<WrongSampleExplanation> explain_wrong_samples(
    const nn::Model<float>& model, const std::vector<const Sample*>& samples,
    const std::vector<int>& predicted, const Tensor<float>& background, const ExplainConfig& cfg);

// SHAP map archive: magic "SRWS", u32 format version, u64 JSON length, meta
// JSON (rows, cols, channels, mode, permutations), u64 record count, then per
// record: id u64, label u8, predicted u8, f32 maps for the label class then
// the predicted class (channels x rows x cols each).
void save_explanations(const std::vector<WrongSampleExplanation>& exps, int rows, int cols,
                       int channels, const ExplainConfig& cfg, const std::string& path);

struct ExplanationArchive {
    int rows = 0, cols = 0, channels = 0;
    std::string mode;
    int permutations = 0;
    std::vector<WrongSampleExplanation> records;
};

ExplanationArchive load_explanations(const std::string& path);

}  // namespace srw::shap
