#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "srw/rng.hpp"
#include "srw/tensor.hpp"

namespace srw::losses {

// Circular label distance: min(|l_a - l_n|, |L - |l_a - l_n||).
inline int lar_delta(int l_a, int l_n, int num_labels) {
    if (l_a == l_n) throw std::invalid_argument("lar_delta: equal labels");
    if (l_a < 0 || l_n < 0 || l_a >= num_labels || l_n >= num_labels)
        throw std::invalid_argument("lar_delta: label outside [0, L)");
    const int d = std::abs(l_a - l_n);
    return std::min(d, std::abs(num_labels - d));
}

struct Triplet {
    int anchor = 0, positive = 0, negative = 0;
    int delta_l = 1;
};

struct TripletBatch {
    std::vector<Triplet> triplets;
    int num_labels = 0;
};

// All valid (anchor, positive, negative) triples in the batch, uniformly
// subsampled to the cap when there are more.
inline TripletBatch mine_triplets(const std::vector<int>& labels, int num_labels, Rng& rng,
                                  std::size_t cap = 512) {
    TripletBatch tb;
    tb.num_labels = num_labels;
    const int n = static_cast<int>(labels.size());
    for (int a = 0; a < n; ++a)
        for (int p = 0; p < n; ++p) {
            if (p == a || labels[static_cast<std::size_t>(p)] != labels[static_cast<std::size_t>(a)])
                continue;
            for (int g = 0; g < n; ++g) {
                if (labels[static_cast<std::size_t>(g)] == labels[static_cast<std::size_t>(a)])
                    continue;
                tb.triplets.push_back({a, p, g,
                                       lar_delta(labels[static_cast<std::size_t>(a)],
                                                 labels[static_cast<std::size_t>(g)], num_labels)});
            }
        }
    if (tb.triplets.size() > cap) {
        for (std::size_t i = 0; i < cap; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(tb.triplets.size() - 1 - i)));
            std::swap(tb.triplets[i], tb.triplets[j]);
        }
        tb.triplets.resize(cap);
    }
    return tb;
}

template <class S>
struct LossResult {
    double value = 0.0;
    Tensor<S> grad;
    bool no_triplets = false;
};

// Label-aware ranking loss. Per anchor a with triplets {(p_j, n_j, dl_j)}:
//   log(1 + sum_j exp(log(dl_j) * <f_a, f_nj> - <f_a, f_pj>))
// averaged over anchors that own at least one triplet. Embeddings are
// expected to be L2-normalized upstream (the formula itself is generic).
template <class S>
LossResult<S> lar_loss(const Tensor<S>& embeddings, const TripletBatch& batch) {
    const std::int64_t n = embeddings.dim(0), d = embeddings.dim(1);
    LossResult<S> out;
    out.grad = Tensor<S>(embeddings.shape);
    if (batch.triplets.empty()) {
        out.no_triplets = true;
        return out;
    }

    std::vector<std::vector<const Triplet*>> by_anchor(static_cast<std::size_t>(n));
    for (const auto& t : batch.triplets) by_anchor[static_cast<std::size_t>(t.anchor)].push_back(&t);
    int anchors = 0;
    for (const auto& v : by_anchor)
        if (!v.empty()) ++anchors;

    auto row = [&](const Tensor<S>& t, int i) { return &t.data[static_cast<std::size_t>(i) * d]; };
    double total = 0.0;
    std::vector<double> terms;
    for (std::int64_t a = 0; a < n; ++a) {
        const auto& list = by_anchor[static_cast<std::size_t>(a)];
        if (list.empty()) continue;
        terms.assign(list.size(), 0.0);
        double mx = 0.0;  // the implicit "+1" term is exp(0)
        for (std::size_t j = 0; j < list.size(); ++j) {
            const Triplet& t = *list[j];
            double sim_an = 0.0, sim_ap = 0.0;
            const S* fa = row(embeddings, t.anchor);
            const S* fn = row(embeddings, t.negative);
            const S* fp = row(embeddings, t.positive);
            for (std::int64_t k = 0; k < d; ++k) {
                sim_an += static_cast<double>(fa[k]) * fn[k];
                sim_ap += static_cast<double>(fa[k]) * fp[k];
            }
            terms[j] = std::log(static_cast<double>(t.delta_l)) * sim_an - sim_ap;
            mx = std::max(mx, terms[j]);
        }
        double denom = std::exp(-mx);  // the "1"
        for (auto& t : terms) denom += std::exp(t - mx);
        total += mx + std::log(denom);

        for (std::size_t j = 0; j < list.size(); ++j) {
            const Triplet& t = *list[j];
            const double sigma = std::exp(terms[j] - mx) / denom;  // dL_a/dt_j
            const double coeff = sigma / static_cast<double>(anchors);
            const double log_dl = std::log(static_cast<double>(t.delta_l));
            const S* fa = row(embeddings, t.anchor);
            const S* fn = row(embeddings, t.negative);
            const S* fp = row(embeddings, t.positive);
            S* ga = &out.grad.data[static_cast<std::size_t>(t.anchor) * d];
            S* gn = &out.grad.data[static_cast<std::size_t>(t.negative) * d];
            S* gp = &out.grad.data[static_cast<std::size_t>(t.positive) * d];
            for (std::int64_t k = 0; k < d; ++k) {
                ga[k] += static_cast<S>(coeff * (log_dl * fn[k] - fp[k]));
                gn[k] += static_cast<S>(coeff * log_dl * fa[k]);
                gp[k] -= static_cast<S>(coeff * fa[k]);
            }
        }
    }
    out.value = total / static_cast<double>(anchors);
    return out;
}

// Margin hinge on the same similarity triplets; comparison baseline only.
template <class S>
LossResult<S> hinge_triplet_loss(const Tensor<S>& embeddings, const TripletBatch& batch,
                                 double margin = 0.2) {
    const std::int64_t d = embeddings.dim(1);
    LossResult<S> out;
    out.grad = Tensor<S>(embeddings.shape);
    if (batch.triplets.empty()) {
        out.no_triplets = true;
        return out;
    }
    const double inv = 1.0 / static_cast<double>(batch.triplets.size());
    double total = 0.0;
    for (const auto& t : batch.triplets) {
        const S* fa = &embeddings.data[static_cast<std::size_t>(t.anchor) * d];
        const S* fp = &embeddings.data[static_cast<std::size_t>(t.positive) * d];
        const S* fn = &embeddings.data[static_cast<std::size_t>(t.negative) * d];
        double sim_ap = 0.0, sim_an = 0.0;
        for (std::int64_t k = 0; k < d; ++k) {
            sim_ap += static_cast<double>(fa[k]) * fp[k];
            sim_an += static_cast<double>(fa[k]) * fn[k];
        }
        const double h = margin - sim_ap + sim_an;
        if (h <= 0.0) continue;
        total += h;
        S* ga = &out.grad.data[static_cast<std::size_t>(t.anchor) * d];
        S* gp = &out.grad.data[static_cast<std::size_t>(t.positive) * d];
        S* gn = &out.grad.data[static_cast<std::size_t>(t.negative) * d];
        for (std::int64_t k = 0; k < d; ++k) {
            ga[k] += static_cast<S>(inv * (static_cast<double>(fn[k]) - fp[k]));
            gp[k] -= static_cast<S>(inv * fa[k]);
            gn[k] += static_cast<S>(inv * fa[k]);
        }
    }
    out.value = total * inv;
    return out;
}

// Mean over pairs of || f(x_i) - f(x'_i) ||_2. Gradient is zero at the
// (nondifferentiable) coincidence point.
template <class S>
struct PairLossResult {
    double value = 0.0;
    Tensor<S> grad_clean, grad_noisy;
};

template <class S>
PairLossResult<S> embedding_stability(const Tensor<S>& f_clean, const Tensor<S>& f_noisy) {
    if (!f_clean.same_shape(f_noisy))
        throw std::invalid_argument("embedding_stability: unpaired batch shapes");
    const std::int64_t n = f_clean.dim(0), d = f_clean.dim(1);
    PairLossResult<S> out;
    out.grad_clean = Tensor<S>(f_clean.shape);
    out.grad_noisy = Tensor<S>(f_clean.shape);
    double total = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double norm2 = 0.0;
        for (std::int64_t k = 0; k < d; ++k) {
            const double diff = static_cast<double>(f_clean.at2(i, k)) - f_noisy.at2(i, k);
            norm2 += diff * diff;
        }
        const double norm = std::sqrt(norm2);
        total += norm;
        if (norm < 1e-12) continue;
        const double coeff = 1.0 / (norm * static_cast<double>(n));
        for (std::int64_t k = 0; k < d; ++k) {
            const double diff = static_cast<double>(f_clean.at2(i, k)) - f_noisy.at2(i, k);
            out.grad_clean.at2(i, k) = static_cast<S>(coeff * diff);
            out.grad_noisy.at2(i, k) = static_cast<S>(-coeff * diff);
        }
    }
    out.value = total / static_cast<double>(n);
    return out;
}

template <class S>
struct CeResult {
    double value = 0.0;
    Tensor<S> grad;                      // w.r.t. probabilities
    std::vector<double> per_sample;      // normalized contributions, sum = value
};

inline constexpr double kProbFloor = 1e-12;

// sum_i w_i * (-log P_i[y_i]) / sum_i w_i. Scaling all weights by c > 0
// leaves value and gradient unchanged.
template <class S>
CeResult<S> weighted_cross_entropy(const Tensor<S>& probabilities, const std::vector<int>& labels,
                                   const std::vector<double>& weights) {
    const std::int64_t n = probabilities.dim(0);
    if (labels.size() != static_cast<std::size_t>(n) || weights.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("weighted_cross_entropy: weight/sample count mismatch");
    double wsum = 0.0;
    for (auto w : weights) {
        if (w < 0.0) throw std::invalid_argument("weighted_cross_entropy: negative weight");
        wsum += w;
    }
    if (wsum <= 0.0) throw std::invalid_argument("weighted_cross_entropy: zero total weight");

    CeResult<S> out;
    out.grad = Tensor<S>(probabilities.shape);
    out.per_sample.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        const double p = static_cast<double>(probabilities.at2(i, y));
        const double p_safe = std::max(p, kProbFloor);
        const double contrib = -weights[static_cast<std::size_t>(i)] * std::log(p_safe) / wsum;
        out.per_sample[static_cast<std::size_t>(i)] = contrib;
        out.value += contrib;
        if (p > kProbFloor)
            out.grad.at2(i, y) = static_cast<S>(-weights[static_cast<std::size_t>(i)] / (p * wsum));
    }
    return out;
}

// Fused softmax + weighted CE on logits; numerically stable training path.
// Agrees with weighted_cross_entropy(softmax(z), ...) where probabilities are
// away from the clamp floor.
template <class S>
CeResult<S> weighted_softmax_ce(const Tensor<S>& logits, const std::vector<int>& labels,
                                const std::vector<double>& weights) {
    const std::int64_t n = logits.dim(0), L = logits.dim(1);
    if (labels.size() != static_cast<std::size_t>(n) || weights.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("weighted_softmax_ce: weight/sample count mismatch");
    double wsum = 0.0;
    for (auto w : weights) wsum += w;
    if (wsum <= 0.0) throw std::invalid_argument("weighted_softmax_ce: zero total weight");

    CeResult<S> out;
    out.grad = Tensor<S>(logits.shape);
    out.per_sample.resize(static_cast<std::size_t>(n));
    std::vector<double> p(static_cast<std::size_t>(L));
    for (std::int64_t i = 0; i < n; ++i) {
        const S* zr = &logits.data[static_cast<std::size_t>(i * L)];
        double mx = zr[0];
        for (std::int64_t j = 1; j < L; ++j) mx = std::max(mx, static_cast<double>(zr[j]));
        double sum = 0.0;
        for (std::int64_t j = 0; j < L; ++j) {
            p[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(zr[j]) - mx);
            sum += p[static_cast<std::size_t>(j)];
        }
        const int y = labels[static_cast<std::size_t>(i)];
        const double w = weights[static_cast<std::size_t>(i)] / wsum;
        const double logp = static_cast<double>(zr[y]) - mx - std::log(sum);
        out.per_sample[static_cast<std::size_t>(i)] = -w * logp;
        out.value += -w * logp;
        for (std::int64_t j = 0; j < L; ++j) {
            const double pj = p[static_cast<std::size_t>(j)] / sum;
            out.grad.at2(i, j) = static_cast<S>(w * (pj - (j == y ? 1.0 : 0.0)));
        }
    }
    return out;
}

// Output-distribution stability, averaged over pairs. The default follows the
// cross-entropy form -sum_j P(j|x) log P(j|x'); true_kl subtracts the clean
// distribution's entropy. Zero probabilities in the noisy branch are clamped
// at 1e-12.
template <class S>
struct ClassStabilityResult {
    double value = 0.0;
    Tensor<S> grad_clean, grad_noisy;  // w.r.t. the probability tensors
};

template <class S>
ClassStabilityResult<S> classification_stability(const Tensor<S>& p_clean, const Tensor<S>& p_noisy,
                                                 bool true_kl = false) {
    if (!p_clean.same_shape(p_noisy))
        throw std::invalid_argument("classification_stability: unpaired batches");
    const std::int64_t n = p_clean.dim(0), L = p_clean.dim(1);
    ClassStabilityResult<S> out;
    out.grad_clean = Tensor<S>(p_clean.shape);
    out.grad_noisy = Tensor<S>(p_clean.shape);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < L; ++j) {
            const double pc = static_cast<double>(p_clean.at2(i, j));
            const double pn = std::max(static_cast<double>(p_noisy.at2(i, j)), kProbFloor);
            out.value += -pc * std::log(pn) * inv_n;
            out.grad_clean.at2(i, j) = static_cast<S>(-std::log(pn) * inv_n);
            if (static_cast<double>(p_noisy.at2(i, j)) > kProbFloor)
                out.grad_noisy.at2(i, j) = static_cast<S>(-pc / pn * inv_n);
            if (true_kl) {
                const double pc_safe = std::max(pc, kProbFloor);
                out.value -= -pc * std::log(pc_safe) * inv_n;
                out.grad_clean.at2(i, j) +=
                    static_cast<S>((std::log(pc_safe) + (pc > kProbFloor ? 1.0 : 0.0)) * inv_n);
            }
        }
    return out;
}

// The four stability-training components and their sum.
struct LossBreakdown {
    double l0_emb = 0.0;
    double lstable_emb = 0.0;
    double l0_class = 0.0;
    double lstable_class = 0.0;
    double total = 0.0;
    std::vector<double> per_sample_ce;
    bool lar_no_triplets = false;
};

inline LossBreakdown stability_total(double l0_emb, double lstable_emb, double l0_class,
                                     double lstable_class) {
    LossBreakdown b;
    b.l0_emb = l0_emb;
    b.lstable_emb = lstable_emb;
    b.l0_class = l0_class;
    b.lstable_class = lstable_class;
    b.total = l0_emb + lstable_emb + l0_class + lstable_class;
    return b;
}

}  // namespace srw::losses
