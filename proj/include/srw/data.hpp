#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srw/tensor.hpp"

namespace srw {

// Split-of-origin tags carried by every sample.
namespace origin {
inline constexpr std::uint8_t kBaseline = 0;    // D^m
inline constexpr std::uint8_t kValidation = 1;  // D^v
inline constexpr std::uint8_t kTest = 2;        // D^t
inline constexpr std::uint8_t kEvalBase = 10;   // D^{v_i} = kEvalBase + i, i >= 1

inline std::uint8_t eval_session(int i) { return static_cast<std::uint8_t>(kEvalBase + i); }
inline bool is_eval(std::uint8_t o) { return o > kEvalBase; }
std::string name(std::uint8_t o);
std::uint8_t from_name(const std::string& s);
}  // namespace origin

struct Sample {
    std::uint64_t id = 0;
    std::uint8_t origin = origin::kBaseline;
    int label = 0;
    Tensor<float> x;  // rank-3 [H, W, C]
};

// Per-channel normalization statistics (dataset-level).
struct ChannelStats {
    std::vector<double> mean, stddev;
};

void to_json(nlohmann::json& j, const ChannelStats& s);
void from_json(const nlohmann::json& j, ChannelStats& s);

struct Dataset {
    nlohmann::json meta;  // generator config, stats, shape, counts
    std::vector<Sample> samples;

    std::vector<std::size_t> indices_of(std::uint8_t origin_tag) const;
    std::vector<std::int64_t> sample_shape() const;  // [H, W, C]
    int num_classes() const;
};

// Dataset container: magic "SRWD", u32 format version, u64 JSON length, meta
// JSON, u64 sample count, then per sample: id u64, origin u8, label u8 and
// the little-endian f32 tensor (shape fixed per file, recorded in the meta).
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Compute per-channel mean/std over the given samples.
ChannelStats compute_channel_stats(const std::vector<Sample>& samples,
                                   const std::vector<std::size_t>& indices);

// In-place z-score normalization of every sample with the given stats.
void apply_channel_stats(std::vector<Sample>& samples, const ChannelStats& stats);

}  // namespace srw
