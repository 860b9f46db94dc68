#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "ranklens/errors.hpp"

namespace ranklens {

// Dense row-major tensor of doubles. Rank is small (<= 3) everywhere in this
// project; shapes are checked at layer boundaries, not per access.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(count(shape), 0.0) {}
    Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != count(shape)) throw numeric_error("tensor data does not match shape");
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }

    // Rank-2 accessors.
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    // Rank-3 accessors (channel, row, col).
    double& at(std::size_t ch, std::size_t r, std::size_t c) {
        return data[(ch * shape[1] + r) * shape[2] + c];
    }
    double at(std::size_t ch, std::size_t r, std::size_t c) const {
        return data[(ch * shape[1] + r) * shape[2] + c];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    Tensor& operator+=(const Tensor& o) {
        if (!same_shape(o)) throw numeric_error("tensor shape mismatch in +=");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }

    double sum() const { return std::accumulate(data.begin(), data.end(), 0.0); }
};

inline Tensor scalar_tensor(double v) { return Tensor({1}, {v}); }

}  // namespace ranklens
