#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srw/error.hpp"
#include "srw/nn/layers.hpp"
#include "srw/rng.hpp"
#include "srw/tensor.hpp"

namespace srw::nn {

// Two architecture families share one descriptor:
//  - dual_chain: the radar network. Input channels split in half into a
//    Macro and a Micro chain of conv5-bn-relu-pool blocks; after each block
//    pair a 2x2 "cross" convolution fuses the chains (and the pooled previous
//    cross map), and the last cross map feeds GAP -> embedding -> logits.
//  - single_chain: a plain small CNN for image inputs, same head.
struct ArchitectureDescriptor {
    std::string kind = "dual_chain";
    int input_rows = 32;
    int input_cols = 32;
    int input_channels = 4;
    int num_classes = 9;
    int embedding_dim = 32;
    std::vector<int> block_channels = {8, 16, 32};
    std::vector<int> cross_channels = {8, 16, 32};
    int conv_kernel = 5;
    int cross_kernel = 2;

    int blocks() const { return static_cast<int>(block_channels.size()); }

    void validate() const {
        if (kind != "dual_chain" && kind != "single_chain")
            throw std::invalid_argument("descriptor: unknown kind '" + kind + "'");
        if (block_channels.empty()) throw std::invalid_argument("descriptor: no blocks");
        if (kind == "dual_chain") {
            if (input_channels % 2 != 0 || input_channels < 2)
                throw std::invalid_argument(
                    "descriptor: dual_chain input channels must be even (macro/micro halves), got " +
                    std::to_string(input_channels));
            if (cross_channels.size() != block_channels.size())
                throw std::invalid_argument(
                    "descriptor: cross stage 'cross" +
                    std::to_string(std::min(cross_channels.size(), block_channels.size())) +
                    "': cross_channels count must equal block count");
        }
        if (num_classes < 2) throw std::invalid_argument("descriptor: num_classes < 2");
        if (embedding_dim < 1) throw std::invalid_argument("descriptor: embedding_dim < 1");
        int r = input_rows, c = input_cols;
        for (int i = 0; i < blocks(); ++i) {
            if (r % 2 || c % 2)
                throw std::invalid_argument("descriptor: block 'block" + std::to_string(i) +
                                            "' pools odd spatial dims " + std::to_string(r) + "x" +
                                            std::to_string(c));
            r /= 2;
            c /= 2;
        }
    }

    // Spatial size after the i-th pool (1-based count of pools applied).
    std::pair<int, int> spatial_after(int pools) const {
        return {input_rows >> pools, input_cols >> pools};
    }

    int trunk_channels() const {
        return kind == "dual_chain" ? cross_channels.back() : block_channels.back();
    }
};

inline void to_json(nlohmann::json& j, const ArchitectureDescriptor& d) {
    j = nlohmann::json{{"kind", d.kind},
                       {"input_rows", d.input_rows},
                       {"input_cols", d.input_cols},
                       {"input_channels", d.input_channels},
                       {"num_classes", d.num_classes},
                       {"embedding_dim", d.embedding_dim},
                       {"block_channels", d.block_channels},
                       {"cross_channels", d.cross_channels},
                       {"conv_kernel", d.conv_kernel},
                       {"cross_kernel", d.cross_kernel}};
}

inline void from_json(const nlohmann::json& j, ArchitectureDescriptor& d) {
    j.at("kind").get_to(d.kind);
    j.at("input_rows").get_to(d.input_rows);
    j.at("input_cols").get_to(d.input_cols);
    j.at("input_channels").get_to(d.input_channels);
    j.at("num_classes").get_to(d.num_classes);
    j.at("embedding_dim").get_to(d.embedding_dim);
    j.at("block_channels").get_to(d.block_channels);
    j.at("cross_channels").get_to(d.cross_channels);
    j.at("conv_kernel").get_to(d.conv_kernel);
    j.at("cross_kernel").get_to(d.cross_kernel);
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class S>
struct ConvBlock {
    Conv2D<S> conv;
    BatchNorm<S> bn;
};

template <class S>
struct Trace;

template <class S>
struct Model {
    ArchitectureDescriptor desc;
    std::uint64_t seed = 0;
    std::uint64_t revision = 0;  // bumped on every optimizer step
    std::int64_t step_count = 0;
    bool train_mode = true;

    std::vector<ConvBlock<S>> macro_blocks, micro_blocks;  // micro unused in single_chain
    std::vector<Conv2D<S>> cross_convs;                    // dual_chain only
    Dense<S> emb_dense, logit_dense;

    void set_train(bool on) { train_mode = on; }

    // Trainable parameters in a fixed order; the same order is used by the
    // optimizer and the checkpoint format.
    std::vector<Param<S>*> parameters() {
        std::vector<Param<S>*> out;
        auto add_chain = [&](std::vector<ConvBlock<S>>& chain) {
            for (auto& blk : chain) {
                out.push_back(&blk.conv.w);
                out.push_back(&blk.conv.b);
                out.push_back(&blk.bn.gamma);
                out.push_back(&blk.bn.beta);
            }
        };
        add_chain(macro_blocks);
        add_chain(micro_blocks);
        for (auto& cc : cross_convs) {
            out.push_back(&cc.w);
            out.push_back(&cc.b);
        }
        out.push_back(&emb_dense.w);
        out.push_back(&emb_dense.b);
        out.push_back(&logit_dense.w);
        out.push_back(&logit_dense.b);
        return out;
    }

    // Non-trainable state (batch-norm running statistics), fixed order.
    std::vector<Tensor<S>*> state_tensors() {
        std::vector<Tensor<S>*> out;
        for (auto* chain : {&macro_blocks, &micro_blocks})
            for (auto& blk : *chain) {
                out.push_back(&blk.bn.running_mean);
                out.push_back(&blk.bn.running_var);
            }
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (auto* p : parameters()) n += p->numel();
        return n;
    }
};

template <class S>
struct Trace {
    std::uint64_t revision = 0;
    bool train_mode = true;
    std::int64_t batch = 0;

    struct BlockCache {
        typename Conv2D<S>::Cache conv;
        typename BatchNorm<S>::Cache bn;
        typename Relu<S>::Cache relu;
        typename MaxPool2<S>::Cache pool;
    };
    struct CrossCache {
        typename MaxPool2<S>::Cache carry_pool;
        typename Conv2D<S>::Cache conv;
        typename Relu<S>::Cache relu;
        std::vector<std::int64_t> split_widths;
    };

    std::vector<BlockCache> macro_blocks, micro_blocks;
    std::vector<CrossCache> crosses;
    typename GlobalAvgPool<S>::Cache gap;
    typename Dense<S>::Cache emb_dense;
    typename Dense<S>::Cache logit_dense;
};

template <class S>
Model<S> build_model(const ArchitectureDescriptor& desc, std::uint64_t seed) {
    desc.validate();
    Model<S> model;
    model.desc = desc;
    model.seed = seed;
    Rng rng(derive_seed(seed, 0xA5C3));

    const int B = desc.blocks();
    auto build_chain = [&](const std::string& prefix, int in_c) {
        std::vector<ConvBlock<S>> chain;
        int c = in_c;
        for (int i = 0; i < B; ++i) {
            ConvBlock<S> blk;
            blk.conv = Conv2D<S>::make(prefix + "conv" + std::to_string(i), c,
                                       desc.block_channels[i], desc.conv_kernel, 1, rng);
            blk.bn = BatchNorm<S>::make(prefix + "bn" + std::to_string(i), desc.block_channels[i]);
            chain.push_back(std::move(blk));
            c = desc.block_channels[i];
        }
        return chain;
    };

    if (desc.kind == "dual_chain") {
        const int half = desc.input_channels / 2;
        model.macro_blocks = build_chain("macro.", half);
        model.micro_blocks = build_chain("micro.", half);
        for (int i = 0; i < B; ++i) {
            int in_c = 2 * desc.block_channels[i];
            if (i > 0) in_c += desc.cross_channels[i - 1];
            model.cross_convs.push_back(Conv2D<S>::make("cross" + std::to_string(i), in_c,
                                                        desc.cross_channels[i], desc.cross_kernel,
                                                        1, rng));
        }
    } else {
        model.macro_blocks = build_chain("block.", desc.input_channels);
    }
    model.emb_dense = Dense<S>::make("embed", desc.trunk_channels(), desc.embedding_dim, rng);
    model.logit_dense = Dense<S>::make("logits", desc.embedding_dim, desc.num_classes, rng);
    return model;
}

// Forward pass. Returns (embeddings [N,emb], logits [N,L]); fills the trace
// when given one. Does not mutate the model, so infer-mode forward is a pure
// function of (parameters, input).
template <class S>
std::pair<Tensor<S>, Tensor<S>> forward(const Model<S>& model, const Tensor<S>& batch,
                                        Trace<S>* trace) {
    const auto& d = model.desc;
    if (batch.rank() != 4 || batch.dim(1) != d.input_rows || batch.dim(2) != d.input_cols ||
        batch.dim(3) != d.input_channels)
        throw std::invalid_argument("forward: batch shape " + batch.shape_str() +
                                    " does not match descriptor input");
    const bool train = model.train_mode;
    if (trace) {
        trace->revision = model.revision;
        trace->train_mode = train;
        trace->batch = batch.dim(0);
        trace->macro_blocks.resize(model.macro_blocks.size());
        trace->micro_blocks.resize(model.micro_blocks.size());
        trace->crosses.resize(model.cross_convs.size());
    }

    auto run_block = [&](const ConvBlock<S>& blk, const Tensor<S>& x,
                         typename Trace<S>::BlockCache* bc) {
        Tensor<S> y = blk.conv.forward(x, bc ? &bc->conv : nullptr);
        y = blk.bn.forward(y, train, bc ? &bc->bn : nullptr);
        y = Relu<S>::forward(y, bc ? &bc->relu : nullptr);
        return MaxPool2<S>::forward(y, bc ? &bc->pool : nullptr);
    };

    Tensor<S> trunk;
    if (d.kind == "dual_chain") {
        const std::int64_t half = d.input_channels / 2;
        auto halves = split_channels(batch, {half, half});
        Tensor<S> mac = std::move(halves[0]);
        Tensor<S> mic = std::move(halves[1]);
        Tensor<S> cross;
        for (int i = 0; i < d.blocks(); ++i) {
            mac = run_block(model.macro_blocks[static_cast<std::size_t>(i)], mac,
                            trace ? &trace->macro_blocks[static_cast<std::size_t>(i)] : nullptr);
            mic = run_block(model.micro_blocks[static_cast<std::size_t>(i)], mic,
                            trace ? &trace->micro_blocks[static_cast<std::size_t>(i)] : nullptr);
            auto* cc = trace ? &trace->crosses[static_cast<std::size_t>(i)] : nullptr;
            Tensor<S> fused;
            if (i == 0) {
                fused = concat_channels<S>({&mac, &mic});
                if (cc) cc->split_widths = {mac.dim(3), mic.dim(3)};
            } else {
                Tensor<S> carried = MaxPool2<S>::forward(cross, cc ? &cc->carry_pool : nullptr);
                fused = concat_channels<S>({&mac, &mic, &carried});
                if (cc) cc->split_widths = {mac.dim(3), mic.dim(3), carried.dim(3)};
            }
            Tensor<S> z = model.cross_convs[static_cast<std::size_t>(i)].forward(
                fused, cc ? &cc->conv : nullptr);
            cross = Relu<S>::forward(z, cc ? &cc->relu : nullptr);
        }
        trunk = std::move(cross);
    } else {
        Tensor<S> x = batch;
        for (int i = 0; i < d.blocks(); ++i)
            x = run_block(model.macro_blocks[static_cast<std::size_t>(i)], x,
                          trace ? &trace->macro_blocks[static_cast<std::size_t>(i)] : nullptr);
        trunk = std::move(x);
    }

    Tensor<S> pooled = GlobalAvgPool<S>::forward(trunk, trace ? &trace->gap : nullptr);
    Tensor<S> emb = model.emb_dense.forward(pooled, trace ? &trace->emb_dense : nullptr);
    Tensor<S> logits = model.logit_dense.forward(emb, trace ? &trace->logit_dense : nullptr);
    return {std::move(emb), std::move(logits)};
}

template <class S>
std::pair<Tensor<S>, Tensor<S>> forward(const Model<S>& model, const Tensor<S>& batch) {
    return forward(model, batch, static_cast<Trace<S>*>(nullptr));
}

// Gradient of the loss with respect to the two network outputs.
template <class S>
struct LossGradient {
    Tensor<S> d_embeddings;  // [N, emb] or empty
    Tensor<S> d_logits;      // [N, L] or empty
};

// Reverse pass accumulating parameter gradients; returns nothing (input
// gradients are not needed by any caller).
template <class S>
void backward(Model<S>& model, Trace<S>& trace, const LossGradient<S>& lg) {
    const auto& d = model.desc;
    Tensor<S> d_emb;
    if (lg.d_logits.numel() > 0) {
        Tensor<S> from_logits = model.logit_dense.backward(lg.d_logits, trace.logit_dense);
        d_emb = std::move(from_logits);
    }
    if (lg.d_embeddings.numel() > 0) {
        if (d_emb.numel() == 0)
            d_emb = lg.d_embeddings;
        else
            for (std::size_t i = 0; i < d_emb.numel(); ++i)
                d_emb.data[i] += lg.d_embeddings.data[i];
    }
    if (d_emb.numel() == 0) throw std::invalid_argument("backward: empty loss gradient");

    Tensor<S> d_pooled = model.emb_dense.backward(d_emb, trace.emb_dense);
    Tensor<S> d_trunk = GlobalAvgPool<S>::backward(d_pooled, trace.gap);

    auto block_backward = [&](ConvBlock<S>& blk, typename Trace<S>::BlockCache& bc,
                              const Tensor<S>& dy, bool need_dx) {
        Tensor<S> g = MaxPool2<S>::backward(dy, bc.pool);
        g = Relu<S>::backward(g, bc.relu);
        g = blk.bn.backward(g, bc.bn);
        return blk.conv.backward(g, bc.conv, need_dx);
    };

    if (d.kind == "dual_chain") {
        const int B = d.blocks();
        std::vector<Tensor<S>> d_mac(static_cast<std::size_t>(B)), d_mic(static_cast<std::size_t>(B));
        Tensor<S> d_cross = std::move(d_trunk);
        for (int i = B - 1; i >= 0; --i) {
            auto& cc = trace.crosses[static_cast<std::size_t>(i)];
            Tensor<S> g = Relu<S>::backward(d_cross, cc.relu);
            Tensor<S> d_fused =
                model.cross_convs[static_cast<std::size_t>(i)].backward(g, cc.conv, true);
            auto parts = split_channels(d_fused, cc.split_widths);
            d_mac[static_cast<std::size_t>(i)] = std::move(parts[0]);
            d_mic[static_cast<std::size_t>(i)] = std::move(parts[1]);
            if (i > 0) d_cross = MaxPool2<S>::backward(parts[2], cc.carry_pool);
        }
        for (auto* side : {&d_mac, &d_mic}) {
            auto& chain = side == &d_mac ? model.macro_blocks : model.micro_blocks;
            auto& caches = side == &d_mac ? trace.macro_blocks : trace.micro_blocks;
            for (int i = B - 1; i >= 0; --i) {
                Tensor<S> d_in = block_backward(chain[static_cast<std::size_t>(i)],
                                                caches[static_cast<std::size_t>(i)],
                                                (*side)[static_cast<std::size_t>(i)], i > 0);
                if (i > 0)
                    for (std::size_t k = 0; k < d_in.numel(); ++k)
                        (*side)[static_cast<std::size_t>(i - 1)].data[k] += d_in.data[k];
            }
        }
    } else {
        Tensor<S> g = std::move(d_trunk);
        for (int i = d.blocks() - 1; i >= 0; --i)
            g = block_backward(model.macro_blocks[static_cast<std::size_t>(i)],
                               trace.macro_blocks[static_cast<std::size_t>(i)], g, i > 0);
    }
}

// Backpropagate, apply one Adam step, refresh batch-norm running statistics,
// zero gradient buffers. Rejects traces recorded before the last step.
template <class S>
void backward_and_step(Model<S>& model, Trace<S>& trace, const LossGradient<S>& lg,
                       const AdamConfig& opt) {
    if (trace.revision != model.revision)
        throw StaleTraceError("trace revision " + std::to_string(trace.revision) +
                              " does not match model revision " + std::to_string(model.revision));
    for (auto* p : model.parameters()) p->ensure_buffers();
    backward(model, trace, lg);

    model.step_count += 1;
    const double t = static_cast<double>(model.step_count);
    const double bc1 = 1.0 - std::pow(opt.beta1, t);
    const double bc2 = 1.0 - std::pow(opt.beta2, t);
    for (auto* p : model.parameters()) {
        S* w = p->value.data.data();
        S* g = p->value.grad.data();
        for (std::size_t i = 0; i < p->numel(); ++i) {
            p->m[i] = static_cast<S>(opt.beta1 * p->m[i] + (1.0 - opt.beta1) * g[i]);
            p->v[i] = static_cast<S>(opt.beta2 * p->v[i] + (1.0 - opt.beta2) * g[i] * g[i]);
            const double mhat = p->m[i] / bc1;
            const double vhat = p->v[i] / bc2;
            w[i] -= static_cast<S>(opt.lr * mhat / (std::sqrt(vhat) + opt.eps));
        }
        p->value.zero_grad();
    }
    if (trace.train_mode) {
        auto apply = [&](std::vector<ConvBlock<S>>& chain,
                         std::vector<typename Trace<S>::BlockCache>& caches) {
            for (std::size_t i = 0; i < chain.size(); ++i)
                chain[i].bn.update_running(caches[i].bn);
        };
        apply(model.macro_blocks, trace.macro_blocks);
        apply(model.micro_blocks, trace.micro_blocks);
    }
    model.revision += 1;
}

// Argmax prediction; ties resolved toward the lowest index.
template <class S>
struct Prediction {
    std::vector<int> labels;
    Tensor<S> probabilities;
};

template <class S>
Prediction<S> predict(const Model<S>& model, const Tensor<S>& batch) {
    if (model.train_mode)
        throw std::invalid_argument("predict: model must be in infer mode");
    auto [emb, logits] = forward(model, batch);
    (void)emb;
    Prediction<S> out;
    out.probabilities = softmax_rows(logits);
    const std::int64_t n = logits.dim(0), L = logits.dim(1);
    out.labels.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < L; ++j)
            if (logits.at2(i, j) > logits.at2(i, best)) best = j;
        out.labels[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

}  // namespace srw::nn
