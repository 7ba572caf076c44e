#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "srw/rng.hpp"
#include "srw/tensor.hpp"

namespace srw::nn {

template <class S>
struct Param {
    Tensor<S> value;  // value.grad holds the accumulated gradient
    std::vector<S> m, v;  // Adam moments, allocated on first step

    std::size_t numel() const { return value.numel(); }
    void ensure_buffers() {
        value.ensure_grad();
        if (m.size() != value.numel()) m.assign(value.numel(), S(0));
        if (v.size() != value.numel()) v.assign(value.numel(), S(0));
    }
};

template <class S>
inline S dot_n(const S* a, const S* b, std::int64_t n) {
    S acc = S(0);
    for (std::int64_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <class S>
inline void axpy_n(S alpha, const S* x, S* y, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline std::int64_t conv_out_dim(std::int64_t in, int k, int stride, int pad_beg, int pad_end) {
    return (in + pad_beg + pad_end - k) / stride + 1;
}

// 2D convolution over NHWC input. Weights are stored [out_c, kh*kw*in_c] so
// both the forward dot products and the backward accumulations run over
// contiguous memory after im2col.
template <class S>
struct Conv2D {
    std::string name;
    int in_c = 0, out_c = 0, kh = 0, kw = 0, stride = 1;
    int pad_t = 0, pad_l = 0, pad_b = 0, pad_r = 0;
    Param<S> w, b;

    struct Cache {
        Tensor<S> col;  // [N*OH*OW, K]
        std::vector<std::int64_t> in_shape;
        std::int64_t oh = 0, ow = 0;
    };

    // "same"-style padding: total pad = k-1, split with the extra row/col at
    // the end (matters for even kernels such as the 2x2 cross stages).
    static Conv2D make(std::string name, int in_c, int out_c, int k, int stride, Rng& rng) {
        Conv2D c;
        c.name = std::move(name);
        c.in_c = in_c;
        c.out_c = out_c;
        c.kh = c.kw = k;
        c.stride = stride;
        const int pad_total = k - 1;
        c.pad_t = c.pad_l = pad_total / 2;
        c.pad_b = c.pad_r = pad_total - pad_total / 2;
        const std::int64_t kdim = static_cast<std::int64_t>(k) * k * in_c;
        c.w.value = Tensor<S>({out_c, kdim});
        c.b.value = Tensor<S>({out_c});
        const double limit = std::sqrt(6.0 / static_cast<double>(kdim));
        for (auto& v : c.w.value.data) v = static_cast<S>(rng.uniform(-limit, limit));
        return c;
    }

    std::int64_t kdim() const { return static_cast<std::int64_t>(kh) * kw * in_c; }

    Tensor<S> forward(const Tensor<S>& x, Cache* cache) const {
        if (x.rank() != 4 || x.dim(3) != in_c)
            throw std::invalid_argument("conv '" + name + "': input shape " + x.shape_str() +
                                        " does not match in_c=" + std::to_string(in_c));
        const std::int64_t n = x.dim(0), h = x.dim(1), wd = x.dim(2);
        const std::int64_t oh = conv_out_dim(h, kh, stride, pad_t, pad_b);
        const std::int64_t ow = conv_out_dim(wd, kw, stride, pad_l, pad_r);
        const std::int64_t rows = n * oh * ow;
        const std::int64_t K = kdim();

        Tensor<S> col({rows, K});
        S* cp = col.data.data();
        for (std::int64_t ni = 0; ni < n; ++ni) {
            for (std::int64_t oy = 0; oy < oh; ++oy) {
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    S* row = cp;
                    for (int ky = 0; ky < kh; ++ky) {
                        const std::int64_t iy = oy * stride - pad_t + ky;
                        for (int kx = 0; kx < kw; ++kx) {
                            const std::int64_t ix = ox * stride - pad_l + kx;
                            if (iy >= 0 && iy < h && ix >= 0 && ix < wd) {
                                std::memcpy(row, &x.data[x.idx4(ni, iy, ix, 0)], sizeof(S) * in_c);
                            } else {
                                std::memset(row, 0, sizeof(S) * in_c);
                            }
                            row += in_c;
                        }
                    }
                    cp += K;
                }
            }
        }

        Tensor<S> y({n, oh, ow, out_c});
        const S* wp = w.value.data.data();
        const S* bp = b.value.data.data();
        for (std::int64_t r = 0; r < rows; ++r) {
            const S* crow = &col.data[static_cast<std::size_t>(r * K)];
            S* yrow = &y.data[static_cast<std::size_t>(r * out_c)];
            for (int oc = 0; oc < out_c; ++oc)
                yrow[oc] = bp[oc] + dot_n(crow, wp + static_cast<std::int64_t>(oc) * K, K);
        }
        if (cache) {
            cache->col = std::move(col);
            cache->in_shape = x.shape;
            cache->oh = oh;
            cache->ow = ow;
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy, const Cache& cache, bool need_dx = true) {
        const std::int64_t K = kdim();
        const std::int64_t rows = cache.col.dim(0);
        w.value.ensure_grad();
        b.value.ensure_grad();
        S* wg = w.value.grad.data();
        S* bg = b.value.grad.data();
        const S* wp = w.value.data.data();

        Tensor<S> dcol;
        if (need_dx) dcol = Tensor<S>({rows, K});
        for (std::int64_t r = 0; r < rows; ++r) {
            const S* dyrow = &dy.data[static_cast<std::size_t>(r * out_c)];
            const S* crow = &cache.col.data[static_cast<std::size_t>(r * K)];
            S* drow = need_dx ? &dcol.data[static_cast<std::size_t>(r * K)] : nullptr;
            for (int oc = 0; oc < out_c; ++oc) {
                const S g = dyrow[oc];
                if (g == S(0)) continue;
                bg[oc] += g;
                axpy_n(g, crow, wg + static_cast<std::int64_t>(oc) * K, K);
                if (need_dx) axpy_n(g, wp + static_cast<std::int64_t>(oc) * K, drow, K);
            }
        }
        if (!need_dx) return Tensor<S>();

        Tensor<S> dx(cache.in_shape);
        const std::int64_t n = dx.dim(0), h = dx.dim(1), wd = dx.dim(2);
        const S* dp = dcol.data.data();
        for (std::int64_t ni = 0; ni < n; ++ni) {
            for (std::int64_t oy = 0; oy < cache.oh; ++oy) {
                for (std::int64_t ox = 0; ox < cache.ow; ++ox) {
                    const S* row = dp;
                    for (int ky = 0; ky < kh; ++ky) {
                        const std::int64_t iy = oy * stride - pad_t + ky;
                        for (int kx = 0; kx < kw; ++kx) {
                            const std::int64_t ix = ox * stride - pad_l + kx;
                            if (iy >= 0 && iy < h && ix >= 0 && ix < wd) {
                                S* xrow = &dx.data[dx.idx4(ni, iy, ix, 0)];
                                for (int c = 0; c < in_c; ++c) xrow[c] += row[c];
                            }
                            row += in_c;
                        }
                    }
                    dp += K;
                }
            }
        }
        return dx;
    }
};

// Per-channel batch normalization over (N,H,W). Training mode normalizes with
// batch statistics; forward never mutates the layer, running statistics are
// refreshed from the cache by the optimizer step.
template <class S>
struct BatchNorm {
    std::string name;
    int channels = 0;
    S momentum = S(0.1);
    S eps = S(1e-5);
    Param<S> gamma, beta;
    Tensor<S> running_mean, running_var;

    struct Cache {
        Tensor<S> xhat;
        std::vector<S> inv_std;
        std::vector<S> batch_mean, batch_var;  // biased variance
        std::int64_t m = 0;                    // samples per channel
    };

    static BatchNorm make(std::string name, int channels) {
        BatchNorm bn;
        bn.name = std::move(name);
        bn.channels = channels;
        bn.gamma.value = Tensor<S>({channels});
        bn.beta.value = Tensor<S>({channels});
        std::fill(bn.gamma.value.data.begin(), bn.gamma.value.data.end(), S(1));
        bn.running_mean = Tensor<S>({channels});
        bn.running_var = Tensor<S>({channels});
        std::fill(bn.running_var.data.begin(), bn.running_var.data.end(), S(1));
        return bn;
    }

    Tensor<S> forward(const Tensor<S>& x, bool train, Cache* cache) const {
        if (x.dim(3) != channels)
            throw std::invalid_argument("batchnorm '" + name + "': channel mismatch");
        const std::int64_t m = x.dim(0) * x.dim(1) * x.dim(2);
        const std::size_t total = x.numel();
        Tensor<S> y(x.shape);
        std::vector<S> mean(channels), var(channels), inv_std(channels);

        if (train) {
            std::vector<double> acc(channels, 0.0), acc2(channels, 0.0);
            for (std::size_t i = 0; i < total; i += channels)
                for (int c = 0; c < channels; ++c) {
                    const double v = static_cast<double>(x.data[i + c]);
                    acc[c] += v;
                    acc2[c] += v * v;
                }
            for (int c = 0; c < channels; ++c) {
                const double mu = acc[c] / static_cast<double>(m);
                mean[c] = static_cast<S>(mu);
                var[c] = static_cast<S>(std::max(0.0, acc2[c] / static_cast<double>(m) - mu * mu));
            }
        } else {
            for (int c = 0; c < channels; ++c) {
                mean[c] = running_mean.data[static_cast<std::size_t>(c)];
                var[c] = running_var.data[static_cast<std::size_t>(c)];
            }
        }
        for (int c = 0; c < channels; ++c) inv_std[c] = S(1) / std::sqrt(var[c] + eps);

        Tensor<S> xhat;
        if (cache) xhat = Tensor<S>(x.shape);
        const S* gp = gamma.value.data.data();
        const S* bp = beta.value.data.data();
        for (std::size_t i = 0; i < total; i += channels)
            for (int c = 0; c < channels; ++c) {
                const S xh = (x.data[i + c] - mean[c]) * inv_std[c];
                if (cache) xhat.data[i + c] = xh;
                y.data[i + c] = gp[c] * xh + bp[c];
            }
        if (cache) {
            cache->xhat = std::move(xhat);
            cache->inv_std = std::move(inv_std);
            cache->batch_mean = std::move(mean);
            cache->batch_var = std::move(var);
            cache->m = m;
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy, const Cache& cache) {
        gamma.value.ensure_grad();
        beta.value.ensure_grad();
        const std::int64_t m = cache.m;
        const std::size_t total = dy.numel();
        std::vector<S> sum_dy(channels, S(0)), sum_dy_xhat(channels, S(0));
        for (std::size_t i = 0; i < total; i += channels)
            for (int c = 0; c < channels; ++c) {
                sum_dy[c] += dy.data[i + c];
                sum_dy_xhat[c] += dy.data[i + c] * cache.xhat.data[i + c];
            }
        for (int c = 0; c < channels; ++c) {
            gamma.value.grad[static_cast<std::size_t>(c)] += sum_dy_xhat[c];
            beta.value.grad[static_cast<std::size_t>(c)] += sum_dy[c];
        }
        Tensor<S> dx(dy.shape);
        const S* gp = gamma.value.data.data();
        const S inv_m = S(1) / static_cast<S>(m);
        for (std::size_t i = 0; i < total; i += channels)
            for (int c = 0; c < channels; ++c) {
                const S t = static_cast<S>(m) * dy.data[i + c] - sum_dy[c] -
                            cache.xhat.data[i + c] * sum_dy_xhat[c];
                dx.data[i + c] = gp[c] * cache.inv_std[c] * inv_m * t;
            }
        return dx;
    }

    void update_running(const Cache& cache) {
        // Unbiased variance goes into the running estimate.
        const double corr = cache.m > 1 ? static_cast<double>(cache.m) / (cache.m - 1) : 1.0;
        for (int c = 0; c < channels; ++c) {
            auto& rm = running_mean.data[static_cast<std::size_t>(c)];
            auto& rv = running_var.data[static_cast<std::size_t>(c)];
            rm = (S(1) - momentum) * rm + momentum * cache.batch_mean[static_cast<std::size_t>(c)];
            rv = (S(1) - momentum) * rv +
                 momentum * static_cast<S>(corr * cache.batch_var[static_cast<std::size_t>(c)]);
        }
    }
};

template <class S>
struct Relu {
    struct Cache {
        Tensor<S> y;
    };
    static Tensor<S> forward(const Tensor<S>& x, Cache* cache) {
        Tensor<S> y(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) y.data[i] = x.data[i] > S(0) ? x.data[i] : S(0);
        if (cache) cache->y = y;
        return y;
    }
    static Tensor<S> backward(const Tensor<S>& dy, const Cache& cache) {
        Tensor<S> dx(dy.shape);
        for (std::size_t i = 0; i < dy.numel(); ++i)
            dx.data[i] = cache.y.data[i] > S(0) ? dy.data[i] : S(0);
        return dx;
    }
};

// 2x2 max pooling, stride 2. Input H and W must be even.
template <class S>
struct MaxPool2 {
    struct Cache {
        std::vector<std::int64_t> argmax;  // flat index into input, per output element
        std::vector<std::int64_t> in_shape;
    };
    static Tensor<S> forward(const Tensor<S>& x, Cache* cache) {
        const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        if (h % 2 || w % 2) throw std::invalid_argument("maxpool: odd spatial dims " + x.shape_str());
        Tensor<S> y({n, h / 2, w / 2, c});
        if (cache) {
            cache->argmax.resize(y.numel());
            cache->in_shape = x.shape;
        }
        std::size_t oi = 0;
        for (std::int64_t ni = 0; ni < n; ++ni)
            for (std::int64_t oy = 0; oy < h / 2; ++oy)
                for (std::int64_t ox = 0; ox < w / 2; ++ox)
                    for (std::int64_t ci = 0; ci < c; ++ci, ++oi) {
                        S best = x.at4(ni, oy * 2, ox * 2, ci);
                        std::int64_t best_idx = static_cast<std::int64_t>(x.idx4(ni, oy * 2, ox * 2, ci));
                        for (int dy0 = 0; dy0 < 2; ++dy0)
                            for (int dx0 = 0; dx0 < 2; ++dx0) {
                                const S v = x.at4(ni, oy * 2 + dy0, ox * 2 + dx0, ci);
                                if (v > best) {
                                    best = v;
                                    best_idx = static_cast<std::int64_t>(
                                        x.idx4(ni, oy * 2 + dy0, ox * 2 + dx0, ci));
                                }
                            }
                        y.data[oi] = best;
                        if (cache) cache->argmax[oi] = best_idx;
                    }
        return y;
    }
    static Tensor<S> backward(const Tensor<S>& dy, const Cache& cache) {
        Tensor<S> dx(cache.in_shape);
        for (std::size_t i = 0; i < dy.numel(); ++i)
            dx.data[static_cast<std::size_t>(cache.argmax[i])] += dy.data[i];
        return dx;
    }
};

// Global average pool: [N,H,W,C] -> [N,C].
template <class S>
struct GlobalAvgPool {
    struct Cache {
        std::vector<std::int64_t> in_shape;
    };
    static Tensor<S> forward(const Tensor<S>& x, Cache* cache) {
        const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        Tensor<S> y({n, c});
        const S inv = S(1) / static_cast<S>(h * w);
        for (std::int64_t ni = 0; ni < n; ++ni)
            for (std::int64_t yi = 0; yi < h; ++yi)
                for (std::int64_t xi = 0; xi < w; ++xi)
                    for (std::int64_t ci = 0; ci < c; ++ci)
                        y.at2(ni, ci) += x.at4(ni, yi, xi, ci) * inv;
        if (cache) cache->in_shape = x.shape;
        return y;
    }
    static Tensor<S> backward(const Tensor<S>& dy, const Cache& cache) {
        Tensor<S> dx(cache.in_shape);
        const std::int64_t n = dx.dim(0), h = dx.dim(1), w = dx.dim(2), c = dx.dim(3);
        const S inv = S(1) / static_cast<S>(h * w);
        for (std::int64_t ni = 0; ni < n; ++ni)
            for (std::int64_t yi = 0; yi < h; ++yi)
                for (std::int64_t xi = 0; xi < w; ++xi)
                    for (std::int64_t ci = 0; ci < c; ++ci)
                        dx.at4(ni, yi, xi, ci) = dy.at2(ni, ci) * inv;
        return dx;
    }
};

template <class S>
struct Dense {
    std::string name;
    int in_dim = 0, out_dim = 0;
    Param<S> w;  // [out, in]
    Param<S> b;  // [out]

    struct Cache {
        Tensor<S> x;
    };

    static Dense make(std::string name, int in_dim, int out_dim, Rng& rng) {
        Dense d;
        d.name = std::move(name);
        d.in_dim = in_dim;
        d.out_dim = out_dim;
        d.w.value = Tensor<S>({out_dim, in_dim});
        d.b.value = Tensor<S>({out_dim});
        const double limit = std::sqrt(6.0 / static_cast<double>(in_dim));
        for (auto& v : d.w.value.data) v = static_cast<S>(rng.uniform(-limit, limit));
        return d;
    }

    Tensor<S> forward(const Tensor<S>& x, Cache* cache) const {
        if (x.rank() != 2 || x.dim(1) != in_dim)
            throw std::invalid_argument("dense '" + name + "': input shape " + x.shape_str() +
                                        " does not match in_dim=" + std::to_string(in_dim));
        const std::int64_t n = x.dim(0);
        Tensor<S> y({n, out_dim});
        for (std::int64_t i = 0; i < n; ++i) {
            const S* xr = &x.data[static_cast<std::size_t>(i * in_dim)];
            S* yr = &y.data[static_cast<std::size_t>(i * out_dim)];
            for (int o = 0; o < out_dim; ++o)
                yr[o] = b.value.data[static_cast<std::size_t>(o)] +
                        dot_n(xr, &w.value.data[static_cast<std::size_t>(o) * in_dim], in_dim);
        }
        if (cache) cache->x = x;
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy, const Cache& cache, bool need_dx = true) {
        w.value.ensure_grad();
        b.value.ensure_grad();
        const std::int64_t n = dy.dim(0);
        Tensor<S> dx;
        if (need_dx) dx = Tensor<S>({n, in_dim});
        for (std::int64_t i = 0; i < n; ++i) {
            const S* dyr = &dy.data[static_cast<std::size_t>(i * out_dim)];
            const S* xr = &cache.x.data[static_cast<std::size_t>(i * in_dim)];
            for (int o = 0; o < out_dim; ++o) {
                const S g = dyr[o];
                if (g == S(0)) continue;
                b.value.grad[static_cast<std::size_t>(o)] += g;
                axpy_n(g, xr, &w.value.grad[static_cast<std::size_t>(o) * in_dim], in_dim);
                if (need_dx)
                    axpy_n(g, &w.value.data[static_cast<std::size_t>(o) * in_dim],
                           &dx.data[static_cast<std::size_t>(i * in_dim)], in_dim);
            }
        }
        return dx;
    }
};

// Concatenate along the channel axis of NHWC tensors.
template <class S>
inline Tensor<S> concat_channels(const std::vector<const Tensor<S>*>& parts) {
    const std::int64_t n = parts[0]->dim(0), h = parts[0]->dim(1), w = parts[0]->dim(2);
    std::int64_t c_total = 0;
    for (const auto* p : parts) {
        if (p->dim(0) != n || p->dim(1) != h || p->dim(2) != w)
            throw std::invalid_argument("concat: spatial shape mismatch");
        c_total += p->dim(3);
    }
    Tensor<S> y({n, h, w, c_total});
    const std::int64_t pixels = n * h * w;
    for (std::int64_t px = 0; px < pixels; ++px) {
        S* dst = &y.data[static_cast<std::size_t>(px * c_total)];
        for (const auto* p : parts) {
            const std::int64_t pc = p->dim(3);
            std::memcpy(dst, &p->data[static_cast<std::size_t>(px * pc)], sizeof(S) * pc);
            dst += pc;
        }
    }
    return y;
}

template <class S>
inline std::vector<Tensor<S>> split_channels(const Tensor<S>& y, const std::vector<std::int64_t>& widths) {
    const std::int64_t n = y.dim(0), h = y.dim(1), w = y.dim(2), c_total = y.dim(3);
    std::vector<Tensor<S>> parts;
    parts.reserve(widths.size());
    for (auto cw : widths) parts.push_back(Tensor<S>({n, h, w, cw}));
    const std::int64_t pixels = n * h * w;
    for (std::int64_t px = 0; px < pixels; ++px) {
        const S* src = &y.data[static_cast<std::size_t>(px * c_total)];
        for (std::size_t k = 0; k < widths.size(); ++k) {
            std::memcpy(&parts[k].data[static_cast<std::size_t>(px * widths[k])], src,
                        sizeof(S) * widths[k]);
            src += widths[k];
        }
    }
    return parts;
}

// Row-wise L2 normalization with gradient support; rows with norm below eps
// are scaled by 1/eps (an exactly linear regime, so finite differences agree).
template <class S>
struct L2NormalizeRows {
    struct Cache {
        Tensor<S> y;
        std::vector<S> norm;
    };
    static constexpr S kEps = S(1e-12);

    static Tensor<S> forward(const Tensor<S>& x, Cache* cache) {
        const std::int64_t n = x.dim(0), d = x.dim(1);
        Tensor<S> y(x.shape);
        std::vector<S> norms(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            const S* xr = &x.data[static_cast<std::size_t>(i * d)];
            S nrm = std::sqrt(dot_n(xr, xr, d));
            if (nrm < kEps) nrm = kEps;
            norms[static_cast<std::size_t>(i)] = nrm;
            for (std::int64_t j = 0; j < d; ++j)
                y.data[static_cast<std::size_t>(i * d + j)] = xr[j] / nrm;
        }
        if (cache) {
            cache->y = y;
            cache->norm = std::move(norms);
        }
        return y;
    }

    static Tensor<S> backward(const Tensor<S>& dy, const Cache& cache) {
        const std::int64_t n = dy.dim(0), d = dy.dim(1);
        Tensor<S> dx(dy.shape);
        for (std::int64_t i = 0; i < n; ++i) {
            const S* dyr = &dy.data[static_cast<std::size_t>(i * d)];
            const S* yr = &cache.y.data[static_cast<std::size_t>(i * d)];
            const S proj = dot_n(dyr, yr, d);
            const S inv = S(1) / cache.norm[static_cast<std::size_t>(i)];
            for (std::int64_t j = 0; j < d; ++j)
                dx.data[static_cast<std::size_t>(i * d + j)] = (dyr[j] - yr[j] * proj) * inv;
        }
        return dx;
    }
};

// Row-wise softmax with max-shift.
template <class S>
inline Tensor<S> softmax_rows(const Tensor<S>& logits) {
    const std::int64_t n = logits.dim(0), d = logits.dim(1);
    Tensor<S> p(logits.shape);
    for (std::int64_t i = 0; i < n; ++i) {
        const S* zr = &logits.data[static_cast<std::size_t>(i * d)];
        S* pr = &p.data[static_cast<std::size_t>(i * d)];
        S mx = zr[0];
        for (std::int64_t j = 1; j < d; ++j) mx = std::max(mx, zr[j]);
        S sum = S(0);
        for (std::int64_t j = 0; j < d; ++j) {
            pr[j] = std::exp(zr[j] - mx);
            sum += pr[j];
        }
        const S inv = S(1) / sum;
        for (std::int64_t j = 0; j < d; ++j) pr[j] *= inv;
    }
    return p;
}

// dL/dlogits from dL/dprobabilities for p = softmax(z).
template <class S>
inline Tensor<S> softmax_backward(const Tensor<S>& dp, const Tensor<S>& p) {
    const std::int64_t n = p.dim(0), d = p.dim(1);
    Tensor<S> dz(p.shape);
    for (std::int64_t i = 0; i < n; ++i) {
        const S* dpr = &dp.data[static_cast<std::size_t>(i * d)];
        const S* pr = &p.data[static_cast<std::size_t>(i * d)];
        S inner = S(0);
        for (std::int64_t j = 0; j < d; ++j) inner += dpr[j] * pr[j];
        for (std::int64_t j = 0; j < d; ++j)
            dz.data[static_cast<std::size_t>(i * d + j)] = pr[j] * (dpr[j] - inner);
    }
    return dz;
}

}  // namespace srw::nn
