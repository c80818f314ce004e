// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "mint/errors.hpp"

namespace mint {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

namespace {

void validate_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
    for (auto e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_to_string(shape));
    }
}

}  // namespace

Tensor::Tensor() : shape_{1}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
        throw ShapeError("tensor payload of " + std::to_string(data_.size()) + " values does not fit shape " +
                         shape_to_string(shape_));
    }
}

Tensor Tensor::scalar(Real value) { return Tensor({1}, std::vector<Real>{value}); }

Tensor Tensor::vector(std::initializer_list<Real> values) { return vector(std::vector<Real>(values)); }

Tensor Tensor::vector(std::vector<Real> values) {
    Shape shape{values.size()};
    return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<Real> values) {
    return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::randn(Shape shape, std::mt19937_64& rng, Real stddev) {
    Tensor t(std::move(shape));
    std::normal_distribution<Real> normal(0.0, stddev);
    for (auto& v : t.data_) v = normal(rng);
    return t;
}

std::span<Real> Tensor::row(std::size_t r) {
    const std::size_t width = shape_.back();
    return std::span<Real>(data_).subspan(r * width, width);
}

std::span<const Real> Tensor::row(std::size_t r) const {
    const std::size_t width = shape_.back();
    return std::span<const Real>(data_).subspan(r * width, width);
}

Real Tensor::item() const {
    if (data_.size() != 1) throw ContractViolation("item() on tensor of shape " + shape_to_string(shape_));
    return data_[0];
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != data_.size()) {
        throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

bool Tensor::bitwise_equal(const Tensor& other) const {
    return shape_ == other.shape_ &&
           std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(Real)) == 0;
}

Real max_abs_difference(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("max_abs_difference: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
    Real worst = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace mint
