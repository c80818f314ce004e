// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tape-based reverse-mode differentiation of a scalar loss with respect to
// trainable Parameters. A Tape is scoped to one adaptation step: record the
// forward computation, call backward() once, then discard the tape.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mint/tensor.hpp"

namespace mint {

/// A named leaf. Frozen parameters enter a tape as constants and never appear in a GradientMap.
struct Parameter {
    std::string id;
    Tensor value;
    bool trainable = true;
};

/// Parameter id -> gradient of identical shape. Ordered so iteration is deterministic.
using GradientMap = std::map<std::string, Tensor>;

namespace ad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while its Tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const;
    bool valid() const { return tape_ != nullptr; }

    Tape& tape() const { return *tape_; }
    std::size_t index() const { return index_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

    Tape* tape_ = nullptr;
    std::size_t index_ = 0;
};

class Tape {
public:
    /// Receives the tape and the node whose gradient is ready; accumulates into parents.
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Non-owning constant; `value` must outlive the tape.
    Var constant_ref(const Tensor& value);
    /// Leaf for `param`. Trainable leaves are cached by id, so repeated calls return the same node.
    /// The parameter's storage must outlive the tape.
    Var parameter(const Parameter& param);

    /// Records the result of `op`. The backward function is kept only when some parent
    /// requires grad. Throws NumericError if `value` is not finite.
    Var record(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

    const Tensor& value(std::size_t node) const;
    bool requires_grad(std::size_t node) const { return nodes_[node].requires_grad; }
    const std::vector<std::size_t>& parents(std::size_t node) const { return nodes_[node].parents; }

    /// Gradient buffer of `node`, zero-initialised on first access during backward.
    Tensor& grad(std::size_t node);

    /// Reverse sweep from a scalar loss. Only nodes reachable from `loss` are visited.
    /// May be called once per tape.
    GradientMap backward(const Var& loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor owned;
        const Tensor* external = nullptr;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool requires_grad = false;
        std::string param_id;
    };

    std::vector<Node> nodes_;
    std::vector<std::optional<Tensor>> grads_;
    std::unordered_map<std::string, std::size_t> leaves_;
    bool consumed_ = false;
};

// Differentiable operations. Shapes are rank 1 ({D}) or rank 2 ({N, D}).

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, Real factor);
/// Sum of same-shaped operands.
Var add_n(std::span<const Var> terms);
/// a {N, D} plus row vector b {D} on every row.
Var add_row(const Var& a, const Var& b);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var softmax(const Var& x, std::size_t axis);
/// Row-wise normalisation of {N, D} (or {D}) with gain and bias of length D.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, Real eps = 1e-5);
/// Exact (erf) GELU.
Var gelu(const Var& x);
/// Mean along `axis`; the reduced axis is dropped (a {D} input reduces to {1}).
Var mean(const Var& x, std::size_t axis);
/// Sum of all entries, shape {1}.
Var sum(const Var& x);
/// Concatenation along the token (leading) axis; rank-1 parts count as one row.
Var concat_rows(std::span<const Var> parts);
/// Rows of {N, D} selected by index, shape {k, D}.
Var gather_rows(const Var& x, std::span<const std::size_t> indices);
/// Single row of {N, D} as a rank-1 {D} tensor.
Var take_row(const Var& x, std::size_t index);
Var reshape(const Var& x, Shape shape);

/// Guard added to the product of norms in every cosine.
inline constexpr Real kCosineEps = 1e-12;

/// a.b / (|a| |b| + eps) for rank-1 operands of equal length; shape {1}.
Var cosine(const Var& a, const Var& b);
/// Cosine of every row of rows {N, D} against b {D}; shape {N}.
Var cosine_rows(const Var& rows, const Var& b);
/// -sum p log p with 0 log 0 = 0. `p` must be a probability vector.
Var entropy(const Var& p);

}  // namespace ad

// Plain-value kernels shared by the differentiable ops and non-recorded call sites,
// so the two paths agree bit for bit.
namespace kernels {

Real dot(std::span<const Real> a, std::span<const Real> b);
Real cosine(std::span<const Real> a, std::span<const Real> b);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax(const Tensor& x, std::size_t axis);
Real entropy(const Tensor& p);

}  // namespace kernels

}  // namespace mint
