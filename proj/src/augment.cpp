#include "srw/augment.hpp"

#include <cstring>

namespace srw::augment {

Sample flip_doppler(const Sample& sample) {
    const auto& x = sample.x;
    const std::int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
    Sample out = sample;
    const std::size_t row_len = static_cast<std::size_t>(w * c);
    for (std::int64_t r = 0; r < h; ++r) {
        const std::int64_t src = (h - r) % h;
        std::memcpy(&out.x.data[static_cast<std::size_t>(r) * row_len],
                    &x.data[static_cast<std::size_t>(src) * row_len], row_len * sizeof(float));
    }
    return out;
}

Sample shift_range(const Sample& sample, int shift_bins, bool zero_fill) {
    const auto& x = sample.x;
    const std::int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (shift_bins < 0 || shift_bins >= w)
        throw std::invalid_argument("shift_range: shift " + std::to_string(shift_bins) +
                                    " outside [0, " + std::to_string(w) + ")");
    if (shift_bins == 0) return sample;
    Sample out = sample;
    for (std::int64_t r = 0; r < h; ++r) {
        for (std::int64_t col = w - 1; col >= shift_bins; --col)
            for (std::int64_t ch = 0; ch < c; ++ch)
                out.x.data[static_cast<std::size_t>((r * w + col) * c + ch)] =
                    x.data[static_cast<std::size_t>((r * w + col - shift_bins) * c + ch)];
        if (zero_fill)
            for (std::int64_t col = 0; col < shift_bins; ++col)
                for (std::int64_t ch = 0; ch < c; ++ch)
                    out.x.data[static_cast<std::size_t>((r * w + col) * c + ch)] = 0.0f;
    }
    return out;
}

}  // namespace srw::augment
