#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "srw/error.hpp"
#include "srw/rng.hpp"
#include "srw/tensor.hpp"

namespace srw::shap {

// Assignment of every pixel of an [H, W, C] input to one coarse feature.
struct FeaturePartition {
    int num_features = 0;
    std::vector<std::int64_t> shape;      // [H, W, C]
    std::vector<int> assignment;          // pixel (HWC order) -> feature index
    std::vector<std::size_t> feature_size;
    int block_rows = 0, block_cols = 0;
    bool per_channel = false;
};

// Contiguous block features tiling the image. With per_channel each channel
// owns its own features (feature = channel-major block index), which is what
// produces per-channel attribution maps.
inline FeaturePartition partition_grid(const std::vector<std::int64_t>& shape, int block_rows,
                                       int block_cols, bool per_channel) {
    if (shape.size() != 3) throw std::invalid_argument("partition_grid: expected [H,W,C] shape");
    const std::int64_t h = shape[0], w = shape[1], c = shape[2];
    if (block_rows <= 0 || block_cols <= 0 || h % block_rows != 0 || w % block_cols != 0)
        throw std::invalid_argument("partition_grid: blocks must tile the image exactly");
    FeaturePartition part;
    part.shape = shape;
    part.block_rows = block_rows;
    part.block_cols = block_cols;
    part.per_channel = per_channel;
    const std::int64_t by = h / block_rows, bx = w / block_cols;
    const std::int64_t blocks = by * bx;
    part.num_features = static_cast<int>(per_channel ? blocks * c : blocks);
    part.assignment.resize(static_cast<std::size_t>(h * w * c));
    part.feature_size.assign(static_cast<std::size_t>(part.num_features), 0);
    std::size_t i = 0;
    for (std::int64_t r = 0; r < h; ++r)
        for (std::int64_t col = 0; col < w; ++col)
            for (std::int64_t ch = 0; ch < c; ++ch, ++i) {
                const std::int64_t block = (r / block_rows) * bx + (col / block_cols);
                const int f = static_cast<int>(per_channel ? ch * blocks + block : block);
                part.assignment[i] = f;
                part.feature_size[static_cast<std::size_t>(f)]++;
            }
    return part;
}

// h_x: absent features take background values.
template <class S>
struct MaskingConfig {
    Tensor<S> background;
};

template <class S>
Tensor<S> mask_apply(const Tensor<S>& x, const std::vector<std::uint8_t>& coalition,
                     const FeaturePartition& part, const MaskingConfig<S>& masking) {
    if (coalition.size() != static_cast<std::size_t>(part.num_features))
        throw std::invalid_argument("mask_apply: coalition length != feature count");
    if (x.shape != part.shape || masking.background.shape != part.shape)
        throw std::invalid_argument("mask_apply: shape mismatch");
    Tensor<S> out = x;
    for (std::size_t i = 0; i < out.numel(); ++i)
        if (!coalition[static_cast<std::size_t>(part.assignment[i])])
            out.data[i] = masking.background.data[i];
    return out;
}

// Batched model evaluation: for a list of (masked) inputs, return one scalar
// per input per explained class.
template <class S>
using PredictFn = std::function<std::vector<std::vector<double>>(const std::vector<Tensor<S>>&)>;

struct ShapResult {
    std::vector<double> phi0;                    // per explained class
    std::vector<std::vector<double>> phi;        // [class][feature]
    std::vector<std::vector<double>> stderr_;    // [class][feature]; zeros in exact mode
    std::string mode;
    int permutations = 0;

    std::size_t num_classes() const { return phi0.size(); }
};

namespace detail {

template <class S>
std::vector<std::vector<double>> evaluate_masks(const PredictFn<S>& f, const Tensor<S>& x,
                                                const FeaturePartition& part,
                                                const MaskingConfig<S>& masking,
                                                const std::vector<std::vector<std::uint8_t>>& masks,
                                                int eval_batch) {
    std::vector<std::vector<double>> values(masks.size());
    std::size_t done = 0;
    while (done < masks.size()) {
        const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(eval_batch),
                                                    masks.size() - done);
        std::vector<Tensor<S>> inputs;
        inputs.reserve(n);
        for (std::size_t k = 0; k < n; ++k)
            inputs.push_back(mask_apply(x, masks[done + k], part, masking));
        auto outs = f(inputs);
        if (outs.size() != n) throw std::invalid_argument("predict fn returned wrong batch size");
        for (std::size_t k = 0; k < n; ++k) values[done + k] = std::move(outs[k]);
        done += n;
    }
    return values;
}

}  // namespace detail

// Exact Shapley values by coalition enumeration (2^M model evaluations):
//   phi_i = sum_{S not containing i} |S|! (M-1-|S|)! / M! * (v(S u {i}) - v(S))
// Satisfies local accuracy exactly: phi0 + sum_i phi_i = v(all features).
template <class S>
ShapResult shapley_exact(const PredictFn<S>& f, const Tensor<S>& x, const FeaturePartition& part,
                         const MaskingConfig<S>& masking, int eval_batch = 256) {
    const int M = part.num_features;
    if (M < 1 || M > 20)
        throw std::invalid_argument("shapley_exact: feature count " + std::to_string(M) +
                                    " outside [1, 20]");
    const std::size_t n_masks = std::size_t(1) << M;
    std::vector<std::vector<std::uint8_t>> masks(n_masks,
                                                 std::vector<std::uint8_t>(static_cast<std::size_t>(M)));
    for (std::size_t m = 0; m < n_masks; ++m)
        for (int i = 0; i < M; ++i) masks[m][static_cast<std::size_t>(i)] = (m >> i) & 1u;
    const auto values = detail::evaluate_masks(f, x, part, masking, masks, eval_batch);
    const std::size_t n_classes = values[0].size();

    // weight[s] = s! (M-1-s)! / M!
    std::vector<double> weight(static_cast<std::size_t>(M));
    {
        std::vector<long double> fact(static_cast<std::size_t>(M) + 1, 1.0L);
        for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<long double>(i);
        for (int s = 0; s < M; ++s)
            weight[static_cast<std::size_t>(s)] = static_cast<double>(
                fact[static_cast<std::size_t>(s)] * fact[static_cast<std::size_t>(M - 1 - s)] /
                fact[static_cast<std::size_t>(M)]);
    }

    ShapResult res;
    res.mode = "exact";
    res.phi0 = values[0];
    res.phi.assign(n_classes, std::vector<double>(static_cast<std::size_t>(M), 0.0));
    res.stderr_.assign(n_classes, std::vector<double>(static_cast<std::size_t>(M), 0.0));
    for (std::size_t m = 0; m < n_masks; ++m) {
        const int size = static_cast<int>(std::popcount(m));
        if (size == M) continue;
        const double w = weight[static_cast<std::size_t>(size)];
        for (int i = 0; i < M; ++i) {
            if ((m >> i) & 1u) continue;
            const std::size_t with_i = m | (std::size_t(1) << i);
            for (std::size_t c = 0; c < n_classes; ++c)
                res.phi[c][static_cast<std::size_t>(i)] += w * (values[with_i][c] - values[m][c]);
        }
    }
    return res;
}

// Unbiased permutation-sampling estimator: each sampled feature ordering
// contributes the marginal of every feature when added to its predecessors.
// Permutation t draws from the stream derive_seed(seed, t), so results do not
// depend on evaluation grouping.
template <class S>
ShapResult shapley_sampled(const PredictFn<S>& f, const Tensor<S>& x, const FeaturePartition& part,
                           const MaskingConfig<S>& masking, int n_permutations, std::uint64_t seed,
                           int eval_batch = 256) {
    const int M = part.num_features;
    if (n_permutations < 1) throw std::invalid_argument("shapley_sampled: need >= 1 permutation");

    const std::vector<std::uint8_t> empty_mask(static_cast<std::size_t>(M), 0);
    const auto v_empty = detail::evaluate_masks(f, x, part, masking, {empty_mask}, eval_batch)[0];
    const std::size_t n_classes = v_empty.size();

    std::vector<std::vector<double>> sum(n_classes, std::vector<double>(static_cast<std::size_t>(M), 0.0));
    std::vector<std::vector<double>> sumsq = sum;

    const int group = std::max(1, eval_batch / std::max(1, M));
    std::vector<int> order(static_cast<std::size_t>(M));
    for (int t = 0; t < n_permutations; t += group) {
        const int g = std::min(group, n_permutations - t);
        std::vector<std::vector<std::uint8_t>> masks;
        masks.reserve(static_cast<std::size_t>(g) * static_cast<std::size_t>(M));
        std::vector<std::vector<int>> orders(static_cast<std::size_t>(g));
        for (int k = 0; k < g; ++k) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t + k)));
            for (int i = 0; i < M; ++i) order[static_cast<std::size_t>(i)] = i;
            for (int i = M - 1; i > 0; --i)
                std::swap(order[static_cast<std::size_t>(i)],
                          order[static_cast<std::size_t>(rng.uniform_int(0, i))]);
            orders[static_cast<std::size_t>(k)] = order;
            std::vector<std::uint8_t> mask(static_cast<std::size_t>(M), 0);
            for (int i = 0; i < M; ++i) {
                mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
                masks.push_back(mask);
            }
        }
        const auto values = detail::evaluate_masks(f, x, part, masking, masks, eval_batch);
        for (int k = 0; k < g; ++k) {
            const auto& ord = orders[static_cast<std::size_t>(k)];
            const std::size_t base = static_cast<std::size_t>(k) * static_cast<std::size_t>(M);
            for (int i = 0; i < M; ++i) {
                const auto& prev = i == 0 ? v_empty : values[base + static_cast<std::size_t>(i - 1)];
                const auto& cur = values[base + static_cast<std::size_t>(i)];
                const std::size_t feat = static_cast<std::size_t>(ord[static_cast<std::size_t>(i)]);
                for (std::size_t c = 0; c < n_classes; ++c) {
                    const double marginal = cur[c] - prev[c];
                    sum[c][feat] += marginal;
                    sumsq[c][feat] += marginal * marginal;
                }
            }
        }
    }

    ShapResult res;
    res.mode = "sampled";
    res.permutations = n_permutations;
    res.phi0 = v_empty;
    res.phi.assign(n_classes, std::vector<double>(static_cast<std::size_t>(M), 0.0));
    res.stderr_.assign(n_classes, std::vector<double>(static_cast<std::size_t>(M), 0.0));
    const double n = static_cast<double>(n_permutations);
    for (std::size_t c = 0; c < n_classes; ++c)
        for (int i = 0; i < M; ++i) {
            const double mean = sum[c][static_cast<std::size_t>(i)] / n;
            res.phi[c][static_cast<std::size_t>(i)] = mean;
            if (n_permutations > 1) {
                const double var =
                    std::max(0.0, (sumsq[c][static_cast<std::size_t>(i)] - n * mean * mean) / (n - 1.0));
                res.stderr_[c][static_cast<std::size_t>(i)] = std::sqrt(var / n);
            }
        }
    return res;
}

// Per-channel pixel maps [channel][row*cols + col]: every pixel of feature i
// receives phi_i / |feature i|, so per-feature pixel sums reproduce phi_i.
using ChannelMaps = std::vector<std::vector<double>>;

inline ChannelMaps attributions_to_maps(const std::vector<double>& phi,
                                        const FeaturePartition& part) {
    const std::int64_t h = part.shape[0], w = part.shape[1], c = part.shape[2];
    ChannelMaps maps(static_cast<std::size_t>(c),
                     std::vector<double>(static_cast<std::size_t>(h * w), 0.0));
    std::size_t i = 0;
    for (std::int64_t r = 0; r < h; ++r)
        for (std::int64_t col = 0; col < w; ++col)
            for (std::int64_t ch = 0; ch < c; ++ch, ++i) {
                const int f = part.assignment[i];
                maps[static_cast<std::size_t>(ch)][static_cast<std::size_t>(r * w + col)] =
                    phi[static_cast<std::size_t>(f)] /
                    static_cast<double>(part.feature_size[static_cast<std::size_t>(f)]);
            }
    return maps;
}

}  // namespace srw::shap
