#include "srw/radar/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "srw/error.hpp"
#include "srw/parallel.hpp"

namespace srw::radar {

void SceneSpec::validate(const RadarConfig& config) const {
    if (num_classes < 1) throw std::invalid_argument("scene: num_classes < 1");
    if (range_min_m >= range_max_m) throw std::invalid_argument("scene: empty range interval");
    if (range_max_m > config.max_range())
        throw std::invalid_argument("scene: range_max beyond unambiguous range");
    if (speed_max_mps > config.max_velocity())
        throw std::invalid_argument("scene: speed_max beyond unambiguous velocity");
    const int max_targets = num_classes - 1;
    if (max_targets > 0) {
        const double span = range_max_m - range_min_m;
        if (static_cast<double>(max_targets - 1) * min_range_separation_m >= span)
            throw DataError("infeasible scene: " + std::to_string(max_targets) +
                            " targets cannot keep " + std::to_string(min_range_separation_m) +
                            " m separation within " + std::to_string(span) + " m");
    }
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
    j = nlohmann::json{{"num_classes", s.num_classes},
                       {"snr_db_min", s.snr_db_min},
                       {"snr_db_max", s.snr_db_max},
                       {"range_min_m", s.range_min_m},
                       {"range_max_m", s.range_max_m},
                       {"speed_min_mps", s.speed_min_mps},
                       {"speed_max_mps", s.speed_max_mps},
                       {"amplitude_min", s.amplitude_min},
                       {"amplitude_max", s.amplitude_max},
                       {"jitter_amp_min_m", s.jitter_amp_min_m},
                       {"jitter_amp_max_m", s.jitter_amp_max_m},
                       {"jitter_freq_min_hz", s.jitter_freq_min_hz},
                       {"jitter_freq_max_hz", s.jitter_freq_max_hz},
                       {"min_range_separation_m", s.min_range_separation_m}};
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
    j.at("num_classes").get_to(s.num_classes);
    j.at("snr_db_min").get_to(s.snr_db_min);
    j.at("snr_db_max").get_to(s.snr_db_max);
    j.at("range_min_m").get_to(s.range_min_m);
    j.at("range_max_m").get_to(s.range_max_m);
    j.at("speed_min_mps").get_to(s.speed_min_mps);
    j.at("speed_max_mps").get_to(s.speed_max_mps);
    j.at("amplitude_min").get_to(s.amplitude_min);
    j.at("amplitude_max").get_to(s.amplitude_max);
    j.at("jitter_amp_min_m").get_to(s.jitter_amp_min_m);
    j.at("jitter_amp_max_m").get_to(s.jitter_amp_max_m);
    j.at("jitter_freq_min_hz").get_to(s.jitter_freq_min_hz);
    j.at("jitter_freq_max_hz").get_to(s.jitter_freq_max_hz);
    j.at("min_range_separation_m").get_to(s.min_range_separation_m);
}

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

std::vector<TargetTrack> generate_scene(const RadarConfig& config, const SceneSpec& spec,
                                        int label, Rng& rng) {
    spec.validate(config);
    if (label < 0 || label >= spec.num_classes)
        throw std::invalid_argument("scene label outside [0, L)");
    std::vector<TargetTrack> targets;
    targets.reserve(static_cast<std::size_t>(label));
    for (int k = 0; k < label; ++k) {
        TargetTrack t;
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            t.range_m = rng.uniform(spec.range_min_m, spec.range_max_m);
            placed = true;
            for (const auto& other : targets)
                if (std::abs(other.range_m - t.range_m) < spec.min_range_separation_m) {
                    placed = false;
                    break;
                }
        }
        if (!placed)
            throw DataError("infeasible scene: could not place target " + std::to_string(k + 1));
        const double speed = rng.uniform(spec.speed_min_mps, spec.speed_max_mps);
        t.velocity_mps = rng.uniform() < 0.5 ? -speed : speed;
        t.amplitude = rng.uniform(spec.amplitude_min, spec.amplitude_max);
        t.jitter_amp_m = rng.uniform(spec.jitter_amp_min_m, spec.jitter_amp_max_m);
        t.jitter_freq_hz = rng.uniform(spec.jitter_freq_min_hz, spec.jitter_freq_max_hz);
        t.jitter_phase = rng.uniform(0.0, kTwoPi);
        targets.push_back(t);
    }
    return targets;
}

Sample make_sample(const RadarConfig& config, const SceneSpec& spec, int label,
                   std::uint64_t sample_seed) {
    Rng rng(sample_seed);
    auto targets = generate_scene(config, spec, label, rng);

    double ref_amp = 1.0;
    for (const auto& t : targets) ref_amp = std::max(ref_amp, t.amplitude);
    const double snr_db = rng.uniform(spec.snr_db_min, spec.snr_db_max);
    const double noise_sigma = ref_amp / std::pow(10.0, snr_db / 20.0);

    std::vector<RawFrame> history;
    history.reserve(static_cast<std::size_t>(config.pn));
    auto tracks = targets;
    for (int f = 0; f < config.pn; ++f) {
        const double t0 = f * config.frame_interval_s;
        history.push_back(synthesize_if_frame(config, tracks, noise_sigma, rng, t0));
        for (auto& t : tracks) {
            t.range_m += t.velocity_mps * config.frame_interval_s;
            if (t.range_m < spec.range_min_m) {
                t.range_m = 2.0 * spec.range_min_m - t.range_m;
                t.velocity_mps = -t.velocity_mps;
            } else if (t.range_m > spec.range_max_m) {
                t.range_m = 2.0 * spec.range_max_m - t.range_m;
                t.velocity_mps = -t.velocity_mps;
            }
        }
    }

    const ComplexMap macro = macro_rdi(mti_filter(history.back()), config);
    const ComplexMap micro = micro_rdi(history, config);
    Sample s;
    s.label = label;
    s.x = pack_channels(macro, micro);
    return s;
}

Dataset generate_dataset(const RadarConfig& config, const SceneSpec& spec,
                         const std::vector<SplitRequest>& splits, std::uint64_t seed,
                         int threads) {
    config.validate();
    spec.validate(config);

    struct Slot {
        std::uint64_t id;
        std::uint8_t origin;
        int label;
    };
    std::vector<Slot> plan;
    std::uint64_t next_id = 0;
    for (const auto& split : splits)
        for (int i = 0; i < split.count; ++i) {
            // Round-robin labels keep every split balanced within one sample.
            plan.push_back({next_id, split.origin, static_cast<int>(next_id % spec.num_classes)});
            ++next_id;
        }

    Dataset ds;
    ds.samples.resize(plan.size());
    parallel_for(plan.size(), threads, [&](std::size_t i) {
        const auto& slot = plan[i];
        Sample s = make_sample(config, spec, slot.label, derive_seed(seed, slot.id));
        s.id = slot.id;
        s.origin = slot.origin;
        ds.samples[i] = std::move(s);
    });

    const auto baseline = ds.indices_of(origin::kBaseline);
    std::vector<std::size_t> stat_indices = baseline;
    if (stat_indices.empty()) {
        stat_indices.resize(ds.samples.size());
        for (std::size_t i = 0; i < ds.samples.size(); ++i) stat_indices[i] = i;
    }
    const ChannelStats stats = compute_channel_stats(ds.samples, stat_indices);
    apply_channel_stats(ds.samples, stats);

    ds.meta["source"] = "radar-sim";
    ds.meta["radar"] = config;
    ds.meta["scene"] = spec;
    ds.meta["stats"] = stats;
    ds.meta["num_classes"] = spec.num_classes;
    ds.meta["seed"] = seed;
    nlohmann::json split_meta = nlohmann::json::array();
    for (const auto& s : splits)
        split_meta.push_back({{"origin", s.origin}, {"count", s.count}});
    ds.meta["splits"] = split_meta;
    return ds;
}

}  // namespace srw::radar
