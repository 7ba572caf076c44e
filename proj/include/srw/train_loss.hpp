#pragma once

#include <string>
#include <vector>

#include "srw/losses.hpp"
#include "srw/nn/layers.hpp"
#include "srw/nn/model.hpp"
#include "srw/rng.hpp"
#include "srw/tensor.hpp"

namespace srw::pipeline {

template <class S>
Tensor<S> rows_slice(const Tensor<S>& t, std::int64_t begin, std::int64_t count) {
    std::vector<std::int64_t> shape = t.shape;
    shape[0] = count;
    Tensor<S> out(shape);
    const std::size_t row = t.numel() / static_cast<std::size_t>(t.dim(0));
    std::copy(t.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(begin) * row),
              t.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(begin + count) * row),
              out.data.begin());
    return out;
}

template <class S>
void rows_write(Tensor<S>& dst, const Tensor<S>& src, std::int64_t at) {
    const std::size_t row = dst.numel() / static_cast<std::size_t>(dst.dim(0));
    std::copy(src.data.begin(), src.data.end(),
              dst.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(at) * row));
}

template <class S>
struct BatchLoss {
    losses::LossBreakdown breakdown;
    nn::LossGradient<S> grads;
};

struct LossOptions {
    bool stability = false;
    bool true_kl = false;
    std::string metric_loss = "lar";  // "lar" | "hinge"
    int triplet_cap = 512;
    int num_labels = 2;
};

// Assembles the training loss and its gradients w.r.t. (embeddings, logits).
//
// Regular mode (batch of N):       L0_emb(LAR on normalized emb) + weighted CE.
// Stability mode (batch of 2N, clean half first): adds the embedding L2
// stability term on raw embeddings and the output-distribution stability term;
// LAR and CE apply to the clean half.
template <class S>
BatchLoss<S> compute_batch_loss(const Tensor<S>& embeddings, const Tensor<S>& logits,
                                const std::vector<int>& labels, const std::vector<double>& weights,
                                const LossOptions& opt, Rng& triplet_rng) {
    const std::int64_t n_clean = static_cast<std::int64_t>(labels.size());
    BatchLoss<S> out;
    out.grads.d_embeddings = Tensor<S>(embeddings.shape);
    out.grads.d_logits = Tensor<S>(logits.shape);

    const Tensor<S> emb_clean = opt.stability ? rows_slice(embeddings, 0, n_clean) : embeddings;
    const Tensor<S> logits_clean = opt.stability ? rows_slice(logits, 0, n_clean) : logits;

    // Metric-learning term on L2-normalized clean embeddings.
    typename nn::L2NormalizeRows<S>::Cache norm_cache;
    const Tensor<S> emb_norm = nn::L2NormalizeRows<S>::forward(emb_clean, &norm_cache);
    const losses::TripletBatch triplets =
        losses::mine_triplets(labels, opt.num_labels, triplet_rng,
                              static_cast<std::size_t>(opt.triplet_cap));
    losses::LossResult<S> metric = opt.metric_loss == "hinge"
                                       ? losses::hinge_triplet_loss(emb_norm, triplets)
                                       : losses::lar_loss(emb_norm, triplets);
    Tensor<S> d_emb_clean = nn::L2NormalizeRows<S>::backward(metric.grad, norm_cache);

    // Weighted classification term on the clean half.
    losses::CeResult<S> ce = losses::weighted_softmax_ce(logits_clean, labels, weights);

    if (!opt.stability) {
        out.grads.d_embeddings = std::move(d_emb_clean);
        out.grads.d_logits = std::move(ce.grad);
        out.breakdown = losses::stability_total(metric.value, 0.0, ce.value, 0.0);
        out.breakdown.per_sample_ce = std::move(ce.per_sample);
        out.breakdown.lar_no_triplets = metric.no_triplets;
        return out;
    }

    if (embeddings.dim(0) != 2 * n_clean)
        throw std::invalid_argument("stability loss: batch is not [clean; noisy] paired");
    const Tensor<S> emb_noisy = rows_slice(embeddings, n_clean, n_clean);
    const Tensor<S> logits_noisy = rows_slice(logits, n_clean, n_clean);

    const auto emb_stab = losses::embedding_stability(emb_clean, emb_noisy);

    const Tensor<S> p_clean = nn::softmax_rows(logits_clean);
    const Tensor<S> p_noisy = nn::softmax_rows(logits_noisy);
    const auto cls_stab = losses::classification_stability(p_clean, p_noisy, opt.true_kl);
    Tensor<S> d_logits_clean = nn::softmax_backward(cls_stab.grad_clean, p_clean);
    const Tensor<S> d_logits_noisy = nn::softmax_backward(cls_stab.grad_noisy, p_noisy);

    for (std::size_t i = 0; i < d_emb_clean.numel(); ++i)
        d_emb_clean.data[i] += emb_stab.grad_clean.data[i];
    for (std::size_t i = 0; i < d_logits_clean.numel(); ++i)
        d_logits_clean.data[i] += ce.grad.data[i];

    rows_write(out.grads.d_embeddings, d_emb_clean, 0);
    rows_write(out.grads.d_embeddings, emb_stab.grad_noisy, n_clean);
    rows_write(out.grads.d_logits, d_logits_clean, 0);
    rows_write(out.grads.d_logits, d_logits_noisy, n_clean);

    out.breakdown = losses::stability_total(metric.value, emb_stab.value, ce.value, cls_stab.value);
    out.breakdown.per_sample_ce = std::move(ce.per_sample);
    out.breakdown.lar_no_triplets = metric.no_triplets;
    return out;
}

}  // namespace srw::pipeline
