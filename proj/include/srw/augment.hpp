#pragma once

#include <stdexcept>

#include "srw/data.hpp"
#include "srw/rng.hpp"
#include "srw/tensor.hpp"

namespace srw::augment {

struct AugmentConfig {
    double flip_prob = 0.1;
    int max_shift = 5;          // R, range bins
    double noise_sigma = 0.01;  // per-pixel Gaussian std (normalized units)
    std::uint64_t seed = 0;

    void validate(int range_bins) const {
        if (flip_prob < 0.0 || flip_prob > 1.0)
            throw std::invalid_argument("augment: flip_prob outside [0,1]");
        if (max_shift < 0 || max_shift >= range_bins)
            throw std::invalid_argument("augment: max_shift must satisfy 0 <= R < range bins");
    }
};

// Mirror the Doppler axis (rows) about the zero-velocity row H/2 on every
// channel. Row r maps to (H - r) mod H, so row 0 (Nyquist) is fixed and the
// center row is fixed; applying it twice is the identity.
Sample flip_doppler(const Sample& sample);

// Range shift by shift_bins: columns r < shift keep their original values,
// columns r >= shift take the value from r - shift. With zero_fill the
// near-range duplicate region is zeroed instead.
Sample shift_range(const Sample& sample, int shift_bins, bool zero_fill = false);

// Pixel-wise i.i.d. Gaussian noise, deterministic for a given rng state.
template <class S>
Tensor<S> add_gaussian_noise(const Tensor<S>& batch, double sigma, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    Tensor<S> out = batch;
    for (auto& v : out.data) v += static_cast<S>(rng.normal(0.0, sigma));
    return out;
}

// [x; x + eps] concatenation along the batch axis; clean half first, pairing
// i <-> i + N.
template <class S>
Tensor<S> make_stability_batch(const Tensor<S>& batch, double sigma, Rng& rng) {
    if (batch.rank() < 1) throw std::invalid_argument("stability batch: empty tensor");
    std::vector<std::int64_t> shape = batch.shape;
    shape[0] *= 2;
    Tensor<S> out(shape);
    const std::size_t half = batch.numel();
    for (std::size_t i = 0; i < half; ++i) out.data[i] = batch.data[i];
    for (std::size_t i = 0; i < half; ++i)
        out.data[half + i] = batch.data[i] + static_cast<S>(rng.normal(0.0, sigma));
    return out;
}

}  // namespace srw::augment
