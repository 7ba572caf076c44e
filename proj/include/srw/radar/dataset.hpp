#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "srw/data.hpp"
#include "srw/radar/sim.hpp"

namespace srw::radar {

// Randomized scene family: the class label is the number of point targets.
struct SceneSpec {
    int num_classes = 3;  // labels 0 .. num_classes-1 (people count)
    double snr_db_min = 4.0;
    double snr_db_max = 14.0;
    double range_min_m = 0.8;
    double range_max_m = 4.2;
    double speed_min_mps = 0.35;
    double speed_max_mps = 2.2;
    double amplitude_min = 0.6;
    double amplitude_max = 1.4;
    double jitter_amp_min_m = 0.0005;
    double jitter_amp_max_m = 0.0030;
    double jitter_freq_min_hz = 0.8;
    double jitter_freq_max_hz = 4.0;
    double min_range_separation_m = 0.45;

    void validate(const RadarConfig& config) const;
};

void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

// Target states for one scene with the requested label (= target count).
// Ranges are rejection-sampled to keep pairwise separation.
std::vector<TargetTrack> generate_scene(const RadarConfig& config, const SceneSpec& spec,
                                        int label, Rng& rng);

// One labeled RDI sample: pn consecutive frames are synthesized while the
// tracks advance (bouncing off the range limits), then Macro (last frame)
// and Micro (full history) maps are packed. Unnormalized.
Sample make_sample(const RadarConfig& config, const SceneSpec& spec, int label,
                   std::uint64_t sample_seed);

struct SplitRequest {
    std::uint8_t origin = origin::kBaseline;
    int count = 0;
};

// Full multi-split dataset. Labels are balanced round-robin within each
// split; every sample draws its own RNG stream from (seed, id), so the
// result is a pure function of (config, spec, splits, seed) and is safe to
// generate in parallel.
Dataset generate_dataset(const RadarConfig& config, const SceneSpec& spec,
                         const std::vector<SplitRequest>& splits, std::uint64_t seed,
                         int threads = 1);

}  // namespace srw::radar
