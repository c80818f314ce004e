// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mint {

using Real = double;
using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major array of reals. Every extent is positive; a scalar is shape {1}.
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, Real fill = 0.0);
    Tensor(Shape shape, std::vector<Real> data);

    static Tensor scalar(Real value);
    static Tensor vector(std::initializer_list<Real> values);
    static Tensor vector(std::vector<Real> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<Real> values);
    static Tensor randn(Shape shape, std::mt19937_64& rng, Real stddev = 1.0);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

    /// Leading extent; for rank-1 tensors this is the length.
    std::size_t rows() const { return shape_.front(); }
    /// Trailing extent; for rank-1 tensors this is the length.
    std::size_t cols() const { return shape_.back(); }

    std::span<Real> data() { return data_; }
    std::span<const Real> data() const { return data_; }
    const std::vector<Real>& values() const { return data_; }

    Real& operator[](std::size_t i) { return data_[i]; }
    Real operator[](std::size_t i) const { return data_[i]; }

    Real& at(std::size_t r, std::size_t c) { return data_[r * shape_.back() + c]; }
    Real at(std::size_t r, std::size_t c) const { return data_[r * shape_.back() + c]; }

    /// Row `r` of a rank-2 tensor (or the whole of a rank-1 tensor when r == 0).
    std::span<Real> row(std::size_t r);
    std::span<const Real> row(std::size_t r) const;

    Real item() const;
    bool all_finite() const;

    Tensor reshaped(Shape shape) const;

    /// Bit-exact comparison of shape and payload.
    bool bitwise_equal(const Tensor& other) const;

private:
    Shape shape_;
    std::vector<Real> data_;
};

Real max_abs_difference(const Tensor& a, const Tensor& b);

}  // namespace mint
