#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "srw/radar/fft.hpp"
#include "srw/rng.hpp"
#include "srw/tensor.hpp"

namespace srw::radar {

inline constexpr double kSpeedOfLight = 299792458.0;

// FMCW front-end and frame geometry. Fast time = samples within a chirp,
// slow time = chirps within a frame. RDIs come out as pn x nts/2.
struct RadarConfig {
    int nts = 64;                       // samples per chirp (power of two)
    int pn = 32;                        // chirps per frame (power of two)
    double carrier_hz = 60e9;
    double bandwidth_hz = 1e9;
    double chirp_s = 32e-6;             // chirp ramp duration
    double chirp_interval_s = 400e-6;   // chirp-to-chirp spacing
    double frame_interval_s = 20e-3;    // frame repetition time
    double sample_rate_hz = 2e6;
    int max_shift_bins = 5;             // R: range-shift augmentation bound

    void validate() const;

    double wavelength() const { return kSpeedOfLight / carrier_hz; }

    // Fractional range bin for a target at range r (meters).
    double range_bin(double range_m) const {
        const double beat_hz = 2.0 * bandwidth_hz * range_m / (kSpeedOfLight * chirp_s);
        return beat_hz * nts / sample_rate_hz;
    }
    // Fractional Doppler bin offset from the centered zero row, frame scale.
    double doppler_bin(double velocity_mps) const {
        const double fd = 2.0 * velocity_mps * carrier_hz / kSpeedOfLight;
        return fd * chirp_interval_s * pn;
    }
    double max_range() const {
        return (nts / 2 - 1) * kSpeedOfLight * chirp_s * sample_rate_hz /
               (2.0 * bandwidth_hz * nts);
    }
    double max_velocity() const {
        return wavelength() / (4.0 * chirp_interval_s);
    }
};

void to_json(nlohmann::json& j, const RadarConfig& c);
void from_json(const nlohmann::json& j, RadarConfig& c);

// Point-target state at the start of a frame. Jitter is a sinusoidal range
// modulation evaluated on absolute time (micro-motion).
struct TargetTrack {
    double range_m = 2.0;
    double velocity_mps = 0.0;
    double amplitude = 1.0;
    double jitter_amp_m = 0.0;
    double jitter_freq_hz = 0.0;
    double jitter_phase = 0.0;
};

struct RawFrame {
    int pn = 0, nts = 0;
    std::vector<cplx> data;  // row-major [pn][nts]

    RawFrame() = default;
    RawFrame(int pn_, int nts_) : pn(pn_), nts(nts_), data(static_cast<std::size_t>(pn_) * nts_) {}
    cplx& at(int p, int n) { return data[static_cast<std::size_t>(p) * nts + n]; }
    const cplx& at(int p, int n) const { return data[static_cast<std::size_t>(p) * nts + n]; }
};

struct ComplexMap {
    int rows = 0, cols = 0;
    std::vector<cplx> data;  // row-major

    ComplexMap() = default;
    ComplexMap(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}
    cplx& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const cplx& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// One frame of IF data for the given target states. Each target is a complex
// tone: beat frequency from its frame-start range along fast time, Doppler
// phase progression (4*pi/lambda)*r(t) across chirps, plus jitter. Receiver
// noise is complex white Gaussian with per-sample power noise_sigma^2.
// frame_start_s only shifts the jitter/doppler time base.
RawFrame synthesize_if_frame(const RadarConfig& config, const std::vector<TargetTrack>& targets,
                             double noise_sigma, Rng& rng, double frame_start_s = 0.0);

// Subtract the slow-time mean per fast-time column.
RawFrame mti_filter(const RawFrame& frame);

// Hamming-windowed range FFT (keep the positive half) then Hamming-windowed
// Doppler FFT with the zero-Doppler row shifted to pn/2. Expects MTI output.
ComplexMap macro_rdi(const RawFrame& frame, const RadarConfig& config);

// Micro-Doppler RDI from exactly pn consecutive frames: per frame the chirp
// mean is taken on the raw frame, the pn mean rows are stacked (slow axis is
// now frame time), then the same MTI + windowed FFT chain is applied.
ComplexMap micro_rdi(const std::vector<RawFrame>& history, const RadarConfig& config);

// Pack Macro/Micro maps into a rank-3 float tensor [pn, nts/2, 4] with
// channel order macro-real, macro-imag, micro-real, micro-imag. No scaling.
Tensor<float> pack_channels(const ComplexMap& macro, const ComplexMap& micro);

// Inverse of pack_channels (used by round-trip checks).
std::pair<ComplexMap, ComplexMap> unpack_channels(const Tensor<float>& x);

}  // namespace srw::radar
