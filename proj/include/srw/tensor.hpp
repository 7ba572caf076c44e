#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace srw {

// Dense row-major tensor. Layout for rank-4 batches is NHWC.
// The gradient buffer is optional and, when present, matches the shape.
template <class S>
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<S> data;
    std::vector<S> grad;  // empty or data.size()

    Tensor() = default;

    explicit Tensor(std::vector<std::int64_t> dims) : shape(std::move(dims)) {
        data.assign(numel_of(shape), S(0));
    }

    Tensor(std::initializer_list<std::int64_t> dims)
        : Tensor(std::vector<std::int64_t>(dims)) {}

    static std::size_t numel_of(const std::vector<std::int64_t>& dims) {
        std::size_t n = 1;
        for (auto d : dims) {
            if (d < 0) throw std::invalid_argument("tensor: negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    std::int64_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), S(0));
    }
    void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }

    S& at4(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) {
        return data[idx4(n, h, w, c)];
    }
    const S& at4(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) const {
        return data[idx4(n, h, w, c)];
    }
    std::size_t idx4(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) const {
        return static_cast<std::size_t>(((n * shape[1] + h) * shape[2] + w) * shape[3] + c);
    }

    S& at2(std::int64_t r, std::int64_t c) { return data[static_cast<std::size_t>(r * shape[1] + c)]; }
    const S& at2(std::int64_t r, std::int64_t c) const {
        return data[static_cast<std::size_t>(r * shape[1] + c)];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    template <class T>
    Tensor<T> cast() const {
        Tensor<T> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
        return out;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << "(";
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << ")";
        return os.str();
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace srw
