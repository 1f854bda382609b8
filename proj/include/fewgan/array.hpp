#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "fewgan/error.hpp"

namespace fewgan {

// Dense row-major array of doubles. Rank is dynamic; everything in this
// project is rank 1 or 2.
struct Array {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Array() = default;

    explicit Array(std::vector<std::size_t> s)
        : shape(std::move(s)), data(numel_of(shape), 0.0) {}

    Array(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size())
            throw DimensionError("Array: shape/data size mismatch");
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    static Array scalar(double v) { return Array({1}, {v}); }

    static Array zeros(std::vector<std::size_t> s) { return Array(std::move(s)); }

    static Array full(std::vector<std::size_t> s, double v) {
        Array a(std::move(s));
        std::fill(a.data.begin(), a.data.end(), v);
        return a;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const {
        if (shape.empty()) throw DimensionError("rows(): rank-0 array");
        return shape[0];
    }
    std::size_t cols() const {
        if (shape.size() < 2) throw DimensionError("cols(): array is not 2-D");
        return shape[1];
    }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    double& operator()(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    bool same_shape(const Array& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

inline bool is_scalar(const Array& a) { return a.numel() == 1; }

inline double scalar_value(const Array& a) {
    if (!is_scalar(a)) throw ContractError("scalar_value: array is not a scalar");
    return a.data[0];
}

}  // namespace fewgan
