#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "flowmotion/errors.hpp"

namespace flowmotion {

// Dense row-major double tensor. Training runs in 64-bit so analytic
// gradients can be checked against central finite differences.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> dims) : shape(std::move(dims)) {
        v.assign(static_cast<size_t>(numel_of(shape)), 0.0);
    }

    static int64_t numel_of(const std::vector<int>& dims) {
        int64_t n = 1;
        for (int d : dims) {
            if (d <= 0) throw ShapeError("tensor dimensions must be positive");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(v.size()); }

    void fill(double value) { std::fill(v.begin(), v.end(), value); }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ", ";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }
};

}  // namespace flowmotion
