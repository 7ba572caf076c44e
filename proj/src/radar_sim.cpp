#include "srw/radar/sim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "srw/error.hpp"

namespace srw::radar {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void RadarConfig::validate() const {
    if (!is_pow2(static_cast<std::size_t>(nts)) || !is_pow2(static_cast<std::size_t>(pn)))
        throw std::invalid_argument("radar config: nts and pn must be powers of two");
    if (sample_rate_hz <= 0 || bandwidth_hz <= 0 || carrier_hz <= 0)
        throw std::invalid_argument("radar config: nonpositive front-end parameter");
    if (chirp_s * sample_rate_hz < nts)
        throw std::invalid_argument("radar config: chirp shorter than nts samples");
    if (chirp_interval_s < chirp_s)
        throw std::invalid_argument("radar config: chirp interval below chirp duration");
    if (frame_interval_s < chirp_interval_s * pn)
        throw std::invalid_argument("radar config: frame interval below chirp train");
    if (max_shift_bins < 0 || max_shift_bins >= nts / 2)
        throw std::invalid_argument("radar config: max shift must satisfy 0 <= R < nts/2");
}

void to_json(nlohmann::json& j, const RadarConfig& c) {
    j = nlohmann::json{{"nts", c.nts},
                       {"pn", c.pn},
                       {"carrier_hz", c.carrier_hz},
                       {"bandwidth_hz", c.bandwidth_hz},
                       {"chirp_s", c.chirp_s},
                       {"chirp_interval_s", c.chirp_interval_s},
                       {"frame_interval_s", c.frame_interval_s},
                       {"sample_rate_hz", c.sample_rate_hz},
                       {"max_shift_bins", c.max_shift_bins}};
}

void from_json(const nlohmann::json& j, RadarConfig& c) {
    j.at("nts").get_to(c.nts);
    j.at("pn").get_to(c.pn);
    j.at("carrier_hz").get_to(c.carrier_hz);
    j.at("bandwidth_hz").get_to(c.bandwidth_hz);
    j.at("chirp_s").get_to(c.chirp_s);
    j.at("chirp_interval_s").get_to(c.chirp_interval_s);
    j.at("frame_interval_s").get_to(c.frame_interval_s);
    j.at("sample_rate_hz").get_to(c.sample_rate_hz);
    j.at("max_shift_bins").get_to(c.max_shift_bins);
}

RawFrame synthesize_if_frame(const RadarConfig& config, const std::vector<TargetTrack>& targets,
                             double noise_sigma, Rng& rng, double frame_start_s) {
    config.validate();
    RawFrame frame(config.pn, config.nts);
    const double lambda = config.wavelength();

    for (const auto& t : targets) {
        const double bin = config.range_bin(t.range_m);
        if (bin < 0.0 || bin >= config.nts / 2)
            throw std::invalid_argument("target at " + std::to_string(t.range_m) +
                                        " m outside unambiguous range");
        if (std::abs(t.velocity_mps) > config.max_velocity())
            throw std::invalid_argument("target velocity " + std::to_string(t.velocity_mps) +
                                        " m/s outside unambiguous velocity");

        const double jitter0 =
            t.jitter_amp_m * std::sin(2.0 * kPi * t.jitter_freq_hz * frame_start_s + t.jitter_phase);
        const double beat_hz =
            2.0 * config.bandwidth_hz * (t.range_m + jitter0) / (kSpeedOfLight * config.chirp_s);
        const double fast_step = 2.0 * kPi * beat_hz / config.sample_rate_hz;
        const cplx fast_rot(std::cos(fast_step), std::sin(fast_step));

        for (int p = 0; p < config.pn; ++p) {
            const double t_chirp = frame_start_s + p * config.chirp_interval_s;
            const double r_p = t.range_m + t.velocity_mps * (p * config.chirp_interval_s) +
                               t.jitter_amp_m *
                                   std::sin(2.0 * kPi * t.jitter_freq_hz * t_chirp + t.jitter_phase);
            const double phase = 4.0 * kPi * r_p / lambda;
            cplx v = t.amplitude * cplx(std::cos(phase), std::sin(phase));
            cplx* row = &frame.at(p, 0);
            for (int n = 0; n < config.nts; ++n) {
                row[n] += v;
                v *= fast_rot;
            }
        }
    }

    if (noise_sigma > 0.0) {
        const double comp_sigma = noise_sigma / std::sqrt(2.0);
        for (auto& v : frame.data)
            v += cplx(rng.normal(0.0, comp_sigma), rng.normal(0.0, comp_sigma));
    }
    return frame;
}

RawFrame mti_filter(const RawFrame& frame) {
    RawFrame out(frame.pn, frame.nts);
    for (int n = 0; n < frame.nts; ++n) {
        cplx mean(0.0, 0.0);
        for (int p = 0; p < frame.pn; ++p) mean += frame.at(p, n);
        mean /= static_cast<double>(frame.pn);
        for (int p = 0; p < frame.pn; ++p) out.at(p, n) = frame.at(p, n) - mean;
    }
    return out;
}

namespace {

// Shared windowed range/Doppler FFT chain on a pn x nts slow-by-fast matrix.
ComplexMap rdi_transform(const RawFrame& m) {
    const int pn = m.pn, nts = m.nts;
    const int half = nts / 2;
    const auto w_fast = hamming(static_cast<std::size_t>(nts));
    const auto w_slow = hamming(static_cast<std::size_t>(pn));

    // Range FFT per chirp, keep the positive-frequency half.
    ComplexMap ranged(pn, half);
    std::vector<cplx> row(static_cast<std::size_t>(nts));
    for (int p = 0; p < pn; ++p) {
        for (int n = 0; n < nts; ++n) row[static_cast<std::size_t>(n)] = m.at(p, n) * w_fast[static_cast<std::size_t>(n)];
        fft_inplace(row);
        for (int n = 0; n < half; ++n) ranged.at(p, n) = row[static_cast<std::size_t>(n)];
    }

    // Doppler FFT per range column, zero Doppler shifted to row pn/2.
    ComplexMap out(pn, half);
    std::vector<cplx> col(static_cast<std::size_t>(pn));
    for (int n = 0; n < half; ++n) {
        for (int p = 0; p < pn; ++p) col[static_cast<std::size_t>(p)] = ranged.at(p, n) * w_slow[static_cast<std::size_t>(p)];
        fft_inplace(col);
        for (int p = 0; p < pn; ++p) out.at(p, n) = col[static_cast<std::size_t>((p + pn / 2) % pn)];
    }
    return out;
}

}  // namespace

ComplexMap macro_rdi(const RawFrame& frame, const RadarConfig&) {
    return rdi_transform(frame);
}

ComplexMap micro_rdi(const std::vector<RawFrame>& history, const RadarConfig& config) {
    if (static_cast<int>(history.size()) != config.pn)
        throw std::invalid_argument("micro_rdi: need exactly pn=" + std::to_string(config.pn) +
                                    " frames, got " + std::to_string(history.size()));
    RawFrame stacked(config.pn, config.nts);
    for (int f = 0; f < config.pn; ++f) {
        const RawFrame& fr = history[static_cast<std::size_t>(f)];
        for (int n = 0; n < config.nts; ++n) {
            cplx mean(0.0, 0.0);
            for (int p = 0; p < fr.pn; ++p) mean += fr.at(p, n);
            stacked.at(f, n) = mean / static_cast<double>(fr.pn);
        }
    }
    return rdi_transform(mti_filter(stacked));
}

Tensor<float> pack_channels(const ComplexMap& macro, const ComplexMap& micro) {
    if (macro.rows != micro.rows || macro.cols != micro.cols)
        throw std::invalid_argument("pack_channels: macro/micro shape mismatch");
    Tensor<float> x({macro.rows, macro.cols, 4});
    std::size_t i = 0;
    for (int r = 0; r < macro.rows; ++r)
        for (int c = 0; c < macro.cols; ++c) {
            x.data[i++] = static_cast<float>(macro.at(r, c).real());
            x.data[i++] = static_cast<float>(macro.at(r, c).imag());
            x.data[i++] = static_cast<float>(micro.at(r, c).real());
            x.data[i++] = static_cast<float>(micro.at(r, c).imag());
        }
    return x;
}

std::pair<ComplexMap, ComplexMap> unpack_channels(const Tensor<float>& x) {
    const int rows = static_cast<int>(x.dim(0)), cols = static_cast<int>(x.dim(1));
    ComplexMap macro(rows, cols), micro(rows, cols);
    std::size_t i = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double mr = x.data[i++], mi = x.data[i++];
            const double ur = x.data[i++], ui = x.data[i++];
            macro.at(r, c) = cplx(mr, mi);
            micro.at(r, c) = cplx(ur, ui);
        }
    return {macro, micro};
}

}  // namespace srw::radar
