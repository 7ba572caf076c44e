#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "srw/augment.hpp"
#include "srw/radar/sim.hpp"

using namespace srw;
using namespace srw::augment;

namespace {

Sample delta_sample(int h, int w, int c, int at_row, int at_col) {
    Sample s;
    s.label = 1;
    s.x = Tensor<float>({h, w, c});
    for (int ch = 0; ch < c; ++ch)
        s.x.data[static_cast<std::size_t>((at_row * w + at_col) * c + ch)] = 1.0f;
    return s;
}

// Packed sample from a single held target state: the track is not advanced
// between frames, so the Micro map is exactly zero and the comparison
// isolates the within-frame Doppler signature.
Sample held_target_sample(const radar::RadarConfig& cfg, double velocity) {
    radar::TargetTrack t;
    t.range_m = 2.2;
    t.velocity_mps = velocity;
    Rng rng(42);
    std::vector<radar::RawFrame> history;
    for (int f = 0; f < cfg.pn; ++f)
        history.push_back(radar::synthesize_if_frame(cfg, {t}, 0.0, rng, f * cfg.frame_interval_s));
    Sample s;
    s.label = 1;
    s.x = radar::pack_channels(radar::macro_rdi(radar::mti_filter(history.back()), cfg),
                               radar::micro_rdi(history, cfg));
    return s;
}

}  // namespace

TEST_CASE("flip_doppler is an involution that preserves label and shape") {
    Sample s = delta_sample(8, 8, 4, 5, 3);
    s.label = 2;
    const auto once = flip_doppler(s);
    const auto twice = flip_doppler(once);
    CHECK(once.label == 2);
    CHECK(once.x.shape == s.x.shape);
    CHECK(twice.x.data == s.x.data);
}

TEST_CASE("flip_doppler sends a delta at row d to row (2*center - d) mod H") {
    const int h = 8, w = 4, c = 1;
    for (int d = 0; d < h; ++d) {
        const auto flipped = flip_doppler(delta_sample(h, w, c, d, 2));
        const int expect = (2 * (h / 2) - d) % h < 0 ? (2 * (h / 2) - d) % h + h
                                                     : (2 * (h / 2) - d) % h;
        for (int r = 0; r < h; ++r)
            CHECK(flipped.x.data[static_cast<std::size_t>((r * w + 2) * c)] ==
                  (r == expect ? 1.0f : 0.0f));
    }
}

TEST_CASE("flipping a -v sample reproduces the +v sample's channel magnitudes") {
    radar::RadarConfig cfg;
    const double v = 1.05;
    const Sample pos = held_target_sample(cfg, v);
    const Sample neg = held_target_sample(cfg, -v);
    const Sample flipped = flip_doppler(neg);

    const std::int64_t h = pos.x.dim(0), w = pos.x.dim(1);
    const auto mag_at = [&](const Sample& s, std::int64_t r, std::int64_t col, int ch0) {
        return std::hypot(
            static_cast<double>(s.x.data[static_cast<std::size_t>((r * w + col) * 4 + ch0)]),
            static_cast<double>(s.x.data[static_cast<std::size_t>((r * w + col) * 4 + ch0 + 1)]));
    };
    double peak = 0.0;
    for (std::int64_t r = 0; r < h; ++r)
        for (std::int64_t col = 0; col < w; ++col) peak = std::max(peak, mag_at(pos, r, col, 0));
    REQUIRE(peak > 1.0);
    double worst = 0.0;
    for (std::int64_t r = 0; r < h; ++r)
        for (std::int64_t col = 0; col < w; ++col) {
            const auto mag = [&](const Sample& s, int ch0) { return mag_at(s, r, col, ch0); };
            worst = std::max(worst, std::abs(mag(pos, 0) - mag(flipped, 0)));
            // Micro channels of a held-state history are identically zero.
            CHECK(mag(pos, 2) < 1e-9 * peak);
            CHECK(mag(flipped, 2) < 1e-9 * peak);
        }
    CHECK(worst <= 1e-5 * peak);
}

TEST_CASE("shift_range: zero shift is the identity, deltas move by R_s") {
    const Sample s = delta_sample(4, 8, 2, 1, 3);
    CHECK(shift_range(s, 0).x.data == s.x.data);

    const auto shifted = shift_range(s, 2);
    CHECK(shifted.label == s.label);
    // Delta moved from range bin 3 to bin 5; bins below the shift keep
    // their original (zero) content.
    for (int col = 0; col < 8; ++col)
        CHECK(shifted.x.data[static_cast<std::size_t>((1 * 8 + col) * 2)] ==
              (col == 5 ? 1.0f : 0.0f));

    CHECK_THROWS_AS(shift_range(s, 8), std::invalid_argument);
    CHECK_THROWS_AS(shift_range(s, -1), std::invalid_argument);
}

TEST_CASE("shift_range duplicates the near-range region verbatim; zero-fill clears it") {
    Sample s;
    s.x = Tensor<float>({1, 6, 1});
    for (int col = 0; col < 6; ++col) s.x.data[static_cast<std::size_t>(col)] = static_cast<float>(col + 1);
    const auto shifted = shift_range(s, 2);
    const std::vector<float> want{1.0f, 2.0f, 1.0f, 2.0f, 3.0f, 4.0f};
    CHECK(shifted.x.data == want);
    const auto zeroed = shift_range(s, 2, true);
    const std::vector<float> want_zero{0.0f, 0.0f, 1.0f, 2.0f, 3.0f, 4.0f};
    CHECK(zeroed.x.data == want_zero);
}

TEST_CASE("shift_range moves a simulated target's argmax range bin by exactly R_s") {
    radar::RadarConfig cfg;
    radar::TargetTrack t;
    t.range_m = 1.6;
    t.velocity_mps = 0.9;
    Rng rng(5);
    const auto rdi = radar::macro_rdi(radar::mti_filter(radar::synthesize_if_frame(cfg, {t}, 0.0, rng)), cfg);
    Sample s;
    s.x = radar::pack_channels(rdi, rdi);
    auto argmax_col = [&](const Sample& sp) {
        int best_col = 0;
        double best = -1.0;
        for (std::int64_t r = 0; r < sp.x.dim(0); ++r)
            for (std::int64_t col = 0; col < sp.x.dim(1); ++col) {
                const double m = std::hypot(
                    sp.x.data[static_cast<std::size_t>((r * sp.x.dim(1) + col) * 4)],
                    sp.x.data[static_cast<std::size_t>((r * sp.x.dim(1) + col) * 4 + 1)]);
                if (m > best) {
                    best = m;
                    best_col = static_cast<int>(col);
                }
            }
        return best_col;
    };
    const int before = argmax_col(s);
    for (int rs : {1, 3, 5}) CHECK(argmax_col(shift_range(s, rs)) == before + rs);
}

TEST_CASE("augmentations commute with channel packing") {
    radar::ComplexMap macro(8, 8), micro(8, 8);
    Rng rng(6);
    for (auto& v : macro.data) v = radar::cplx(rng.normal(), rng.normal());
    for (auto& v : micro.data) v = radar::cplx(rng.normal(), rng.normal());
    Sample packed;
    packed.x = radar::pack_channels(macro, micro);

    // Mirror each complex map's rows, then pack.
    radar::ComplexMap macro_f(8, 8), micro_f(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            macro_f.at(r, c) = macro.at((8 - r) % 8, c);
            micro_f.at(r, c) = micro.at((8 - r) % 8, c);
        }
    Sample packed_then_flipped = flip_doppler(packed);
    const auto flipped_then_packed = radar::pack_channels(macro_f, micro_f);
    CHECK(packed_then_flipped.x.data == flipped_then_packed.data);
}

TEST_CASE("gaussian noise is seed-deterministic with calibrated std") {
    Rng rng(7);
    Tensor<float> x({100, 100});
    for (auto& v : x.data) v = static_cast<float>(rng.normal());

    Rng n1(123), n2(123);
    const auto a = add_gaussian_noise(x, 0.05, n1);
    const auto b = add_gaussian_noise(x, 0.05, n2);
    CHECK(a.data == b.data);

    // sigma -> 0 limit: output equals input.
    Rng n3(5);
    CHECK(add_gaussian_noise(x, 0.0, n3).data == x.data);

    // Empirical std over 10^4 draws within 5% of sigma.
    const double sigma = 0.01;
    Rng n4(99);
    Tensor<double> zeros({10000});
    const auto noisy = add_gaussian_noise(zeros, sigma, n4);
    double acc = 0.0, acc2 = 0.0;
    for (double v : noisy.data) {
        acc += v;
        acc2 += v * v;
    }
    const double mean = acc / 10000.0;
    const double std = std::sqrt(acc2 / 10000.0 - mean * mean);
    CHECK(std == doctest::Approx(sigma).epsilon(0.05));
}

TEST_CASE("stability batches pair clean and noisy halves") {
    Rng rng(8);
    Tensor<float> batch({5, 3, 3, 2});
    for (auto& v : batch.data) v = static_cast<float>(rng.normal());
    Rng noise(9);
    const double sigma = 0.02;
    const auto doubled = make_stability_batch(batch, sigma, noise);
    REQUIRE(doubled.dim(0) == 10);
    for (std::size_t i = 0; i < batch.numel(); ++i) CHECK(doubled.data[i] == batch.data[i]);

    double acc = 0.0, acc2 = 0.0;
    for (std::size_t i = 0; i < batch.numel(); ++i) {
        const double diff = static_cast<double>(doubled.data[batch.numel() + i]) - batch.data[i];
        acc += diff;
        acc2 += diff * diff;
    }
    const double n = static_cast<double>(batch.numel());
    const double mean = acc / n;
    const double std = std::sqrt(acc2 / n - mean * mean);
    CHECK(std::abs(mean) < 0.01);
    CHECK(std == doctest::Approx(sigma).epsilon(0.25));
}

TEST_CASE("augment config validation") {
    AugmentConfig cfg;
    cfg.flip_prob = 0.1;
    cfg.max_shift = 5;
    CHECK_NOTHROW(cfg.validate(32));
    cfg.flip_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(32), std::invalid_argument);
    cfg.flip_prob = 0.1;
    cfg.max_shift = 32;
    CHECK_THROWS_AS(cfg.validate(32), std::invalid_argument);
}
