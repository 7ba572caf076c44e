#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "srw/shap.hpp"

namespace srw::weighting {

enum class Method { kNone, kSoftmax, kMaskedDiff, kLocalizeDiff };

Method method_from_string(const std::string& s);
std::string method_name(Method m);

// Probability-vector weight for a prediction: 1 when correct, otherwise
// 1 + P(y_pred) - P(y_label). Bounded in [1, 2] whenever y_pred is the argmax.
double softmax_weight(const std::vector<double>& probabilities, int predicted, int label);

// Positive-evidence mask difference: per channel, average (M_hat - M) over the
// positions where M_hat > 0; channels with no positive M_hat pixel contribute
// zero. Returns the sum over channels.
double masked_difference(const shap::ChannelMaps& maps_predicted,
                         const shap::ChannelMaps& maps_label);

// Full signed gap: sum over channels and all pixels of (M_hat - M).
double localize_difference(const shap::ChannelMaps& maps_predicted,
                           const shap::ChannelMaps& maps_label);

struct WeightEntry {
    std::uint64_t sample_id = 0;
    std::uint8_t origin = 0;
    Method method = Method::kNone;
    double delta_w = 0.0;
    double weight = 1.0;
};

// Per-sample training weights for one retraining session. Baseline samples
// always carry weight 1; incremental samples carry max(1 + delta_w, w_min).
struct WeightTable {
    std::map<std::uint64_t, WeightEntry> entries;
    int session = 0;
    double w_min = 0.05;

    double weight_of(std::uint64_t id) const;
    bool contains(std::uint64_t id) const { return entries.count(id) != 0; }
    std::size_t size() const { return entries.size(); }
};

struct DeltaInput {
    std::uint64_t sample_id = 0;
    std::uint8_t origin = 0;
    double delta_w = 0.0;
};

// Builds the table: weight 1 for baseline ids, clamped 1 + delta_w for the
// listed incremental samples. Throws if an incremental id lacks a delta.
WeightTable finalize_weights(const std::vector<std::pair<std::uint64_t, std::uint8_t>>& baseline_ids,
                             const std::vector<DeltaInput>& incremental, Method method,
                             double w_min = 0.05);

// CSV: sample_id, origin, method, delta_w, weight (one row per sample).
void save_weight_table(const WeightTable& table, const std::string& path);
WeightTable load_weight_table(const std::string& path);

}  // namespace srw::weighting
