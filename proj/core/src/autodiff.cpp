// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "mint/errors.hpp"

namespace mint {

namespace kernels {

Real dot(std::span<const Real> a, std::span<const Real> b) {
    Real acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

Real cosine(std::span<const Real> a, std::span<const Real> b) {
    if (a.size() != b.size()) {
        throw ShapeError("cosine: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    const Real na = std::sqrt(dot(a, a));
    const Real nb = std::sqrt(dot(b, b));
    return dot(a, b) / (na * nb + ad::kCosineEps);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: cannot multiply " + shape_to_string(a.shape()) + " by " +
                         shape_to_string(b.shape()));
    }
    const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        Real* orow = out.data().data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const Real av = a[i * k + p];
            const Real* brow = b.data().data() + p * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    if (x.rank() > 2 || axis >= x.rank()) {
        throw ContractViolation("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                                shape_to_string(x.shape()));
    }
    Tensor out(x.shape());
    const std::size_t rows = x.rank() == 1 ? 1 : x.dim(0);
    const std::size_t cols = x.rank() == 1 ? x.dim(0) : x.dim(1);
    // Reduce along `axis`: lanes are rows for axis == last, columns otherwise.
    const bool along_cols = (x.rank() == 1) || axis == 1;
    const std::size_t lanes = along_cols ? rows : cols;
    const std::size_t len = along_cols ? cols : rows;
    const std::size_t stride = along_cols ? 1 : cols;
    for (std::size_t lane = 0; lane < lanes; ++lane) {
        const std::size_t base = along_cols ? lane * cols : lane;
        Real hi = x[base];
        for (std::size_t i = 1; i < len; ++i) hi = std::max(hi, x[base + i * stride]);
        Real total = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const Real e = std::exp(x[base + i * stride] - hi);
            out[base + i * stride] = e;
            total += e;
        }
        for (std::size_t i = 0; i < len; ++i) out[base + i * stride] /= total;
    }
    return out;
}

Real entropy(const Tensor& p) {
    if (p.rank() != 1) throw ShapeError("entropy: expected a vector, got " + shape_to_string(p.shape()));
    Real total = 0.0;
    for (auto v : p.data()) {
        if (v < 0.0) throw ContractViolation("entropy: negative probability " + std::to_string(v));
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw ContractViolation("entropy: probabilities sum to " + std::to_string(total));
    }
    Real h = 0.0;
    for (auto v : p.data()) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

}  // namespace kernels

namespace ad {

const Tensor& Var::value() const { return tape_->value(index_); }

bool Var::requires_grad() const { return tape_->requires_grad(index_); }

Var Tape::constant(Tensor value) {
    if (!value.all_finite()) throw NumericError("constant: non-finite value");
    Node node;
    node.owned = std::move(value);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant_ref(const Tensor& value) {
    Node node;
    node.external = &value;
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const Parameter& param) {
    if (!param.trainable) return constant_ref(param.value);
    if (auto it = leaves_.find(param.id); it != leaves_.end()) return Var(this, it->second);
    Node node;
    node.external = &param.value;
    node.requires_grad = true;
    node.param_id = param.id;
    nodes_.push_back(std::move(node));
    leaves_.emplace(param.id, nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
    if (!value.all_finite()) throw NumericError(std::string(op) + ": produced a non-finite value");
    Node node;
    node.owned = std::move(value);
    node.requires_grad = std::any_of(parents.begin(), parents.end(),
                                     [this](std::size_t p) { return nodes_[p].requires_grad; });
    if (node.requires_grad) {
        node.backward = std::move(backward);
        node.parents = std::move(parents);
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t node) const {
    const Node& n = nodes_[node];
    return n.external ? *n.external : n.owned;
}

Tensor& Tape::grad(std::size_t node) {
    auto& slot = grads_[node];
    if (!slot) slot.emplace(value(node).shape(), 0.0);
    return *slot;
}

GradientMap Tape::backward(const Var& loss) {
    if (loss.tape_ != this) throw ContractViolation("backward: loss belongs to a different tape");
    if (consumed_) throw ContractViolation("backward: tape already consumed");
    if (value(loss.index_).numel() != 1) {
        throw ContractViolation("backward: loss must be scalar, got shape " +
                                shape_to_string(value(loss.index_).shape()));
    }
    consumed_ = true;
    GradientMap out;
    if (!nodes_[loss.index_].requires_grad) return out;

    std::vector<bool> reachable(nodes_.size(), false);
    reachable[loss.index_] = true;
    for (std::size_t i = loss.index_ + 1; i-- > 0;) {
        if (!reachable[i]) continue;
        for (auto p : nodes_[i].parents) {
            if (nodes_[p].requires_grad) reachable[p] = true;
        }
    }

    grads_.assign(nodes_.size(), std::nullopt);
    grad(loss.index_)[0] = 1.0;
    for (std::size_t i = loss.index_ + 1; i-- > 0;) {
        if (!reachable[i]) continue;
        Node& node = nodes_[i];
        if (node.backward) {
            if (grads_[i]) node.backward(*this, i);
            node.backward = nullptr;
        } else if (!node.param_id.empty()) {
            Tensor g = grads_[i] ? std::move(*grads_[i]) : Tensor(value(i).shape(), 0.0);
            auto [it, fresh] = out.emplace(node.param_id, std::move(g));
            (void)it;
            (void)fresh;
        }
        if (node.backward == nullptr && node.param_id.empty()) grads_[i].reset();
    }
    grads_.clear();
    return out;
}

namespace {

void require_same_tape(const Var& a, const Var& b, const char* op) {
    if (&a.tape() != &b.tape()) throw ContractViolation(std::string(op) + ": operands on different tapes");
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " differ");
    }
}

void accumulate(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

std::size_t row_count(const Tensor& t) { return t.rank() == 1 ? 1 : t.dim(0); }

}  // namespace

Var add(const Var& a, const Var& b) {
    require_same_tape(a, b, "add");
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    accumulate(out, b.value());
    const std::size_t ia = a.index(), ib = b.index();
    return a.tape().record("add", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) accumulate(t.grad(ia), g);
        if (t.requires_grad(ib)) accumulate(t.grad(ib), g);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_tape(a, b, "sub");
    require_same_shape(a, b, "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
    const std::size_t ia = a.index(), ib = b.index();
    return a.tape().record("sub", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) accumulate(t.grad(ia), g);
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);
            for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] -= g[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_tape(a, b, "mul");
    require_same_shape(a, b, "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
    const std::size_t ia = a.index(), ib = b.index();
    return a.tape().record("mul", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.value(ia);
        const Tensor& bv = t.value(ib);
        if (t.requires_grad(ia)) {
            Tensor& ga = t.grad(ia);
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);
            for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var scale(const Var& a, Real factor) {
    Tensor out = a.value();
    for (auto& v : out.data()) v *= factor;
    const std::size_t ia = a.index();
    return a.tape().record("scale", std::move(out), {ia}, [ia, factor](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g[i] * factor;
    });
}

Var add_n(std::span<const Var> terms) {
    if (terms.empty()) throw ContractViolation("add_n: no operands");
    Tensor out = terms[0].value();
    std::vector<std::size_t> parents{terms[0].index()};
    for (std::size_t k = 1; k < terms.size(); ++k) {
        require_same_tape(terms[0], terms[k], "add_n");
        require_same_shape(terms[0], terms[k], "add_n");
        accumulate(out, terms[k].value());
        parents.push_back(terms[k].index());
    }
    auto ids = parents;
    return terms[0].tape().record("add_n", std::move(out), std::move(parents),
                                  [ids = std::move(ids)](Tape& t, std::size_t self) {
                                      const Tensor& g = t.grad(self);
                                      for (auto p : ids) {
                                          if (t.requires_grad(p)) accumulate(t.grad(p), g);
                                      }
                                  });
}

Var add_row(const Var& a, const Var& b) {
    require_same_tape(a, b, "add_row");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (bv.rank() != 1 || av.cols() != bv.dim(0)) {
        throw ShapeError("add_row: cannot add " + shape_to_string(bv.shape()) + " to rows of " +
                         shape_to_string(av.shape()));
    }
    Tensor out = av;
    const std::size_t n = row_count(av), d = av.cols();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) out[r * d + c] += bv[c];
    }
    const std::size_t ia = a.index(), ib = b.index();
    return a.tape().record("add_row", std::move(out), {ia, ib}, [ia, ib, n, d](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) accumulate(t.grad(ia), g);
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < d; ++c) gb[c] += g[r * d + c];
            }
        }
    });
}

Var matmul(const Var& a, const Var& b) {
    require_same_tape(a, b, "matmul");
    Tensor out = kernels::matmul(a.value(), b.value());
    const std::size_t ia = a.index(), ib = b.index();
    return a.tape().record("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);  // n x m
        const Tensor& av = t.value(ia);  // n x k
        const Tensor& bv = t.value(ib);  // k x m
        const std::size_t n = av.dim(0), k = av.dim(1), m = bv.dim(1);
        if (t.requires_grad(ia)) {
            Tensor& ga = t.grad(ia);  // g * b^T
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    Real acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * bv[p * m + j];
                    ga[i * k + p] += acc;
                }
            }
        }
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);  // a^T * g
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const Real av_ip = av[i * k + p];
                    for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += av_ip * g[i * m + j];
                }
            }
        }
    });
}

Var transpose(const Var& a) {
    const Tensor& av = a.value();
    if (av.rank() != 2) throw ShapeError("transpose: expected a matrix, got " + shape_to_string(av.shape()));
    const std::size_t n = av.dim(0), m = av.dim(1);
    Tensor out({m, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) out[j * n + i] = av[i * m + j];
    }
    const std::size_t ia = a.index();
    return a.tape().record("transpose", std::move(out), {ia}, [ia, n, m](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += g[j * n + i];
        }
    });
}

Var softmax(const Var& x, std::size_t axis) {
    Tensor out = kernels::softmax(x.value(), axis);
    const std::size_t ix = x.index();
    const Tensor& xv = x.value();
    const bool along_cols = xv.rank() == 1 || axis == 1;
    const std::size_t rows = row_count(xv), cols = xv.cols();
    return x.tape().record(
        "softmax", std::move(out), {ix}, [ix, along_cols, rows, cols](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& y = t.value(self);
            Tensor& gx = t.grad(ix);
            const std::size_t lanes = along_cols ? rows : cols;
            const std::size_t len = along_cols ? cols : rows;
            const std::size_t stride = along_cols ? 1 : cols;
            for (std::size_t lane = 0; lane < lanes; ++lane) {
                const std::size_t base = along_cols ? lane * cols : lane;
                Real inner = 0.0;
                for (std::size_t i = 0; i < len; ++i) inner += g[base + i * stride] * y[base + i * stride];
                for (std::size_t i = 0; i < len; ++i) {
                    const std::size_t at = base + i * stride;
                    gx[at] += y[at] * (g[at] - inner);
                }
            }
        });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, Real eps) {
    require_same_tape(x, gain, "layer_norm");
    require_same_tape(x, bias, "layer_norm");
    const Tensor& xv = x.value();
    const std::size_t n = row_count(xv), d = xv.cols();
    if (gain.value().rank() != 1 || gain.value().dim(0) != d || bias.shape() != gain.shape()) {
        throw ShapeError("layer_norm: gain/bias " + shape_to_string(gain.shape()) + "/" +
                         shape_to_string(bias.shape()) + " do not match width of " + shape_to_string(xv.shape()));
    }
    Tensor out(xv.shape());
    Tensor normed(xv.shape());
    std::vector<Real> inv_std(n);
    const Tensor& gv = gain.value();
    const Tensor& bv = bias.value();
    for (std::size_t r = 0; r < n; ++r) {
        Real mu = 0.0;
        for (std::size_t c = 0; c < d; ++c) mu += xv[r * d + c];
        mu /= static_cast<Real>(d);
        Real var = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const Real z = xv[r * d + c] - mu;
            var += z * z;
        }
        var /= static_cast<Real>(d);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < d; ++c) {
            const Real h = (xv[r * d + c] - mu) * inv_std[r];
            normed[r * d + c] = h;
            out[r * d + c] = h * gv[c] + bv[c];
        }
    }
    const std::size_t ix = x.index(), ig = gain.index(), ib = bias.index();
    return x.tape().record(
        "layer_norm", std::move(out), {ix, ig, ib},
        [ix, ig, ib, n, d, normed = std::move(normed), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& gain_v = t.value(ig);
            if (t.requires_grad(ig)) {
                Tensor& gg = t.grad(ig);
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t c = 0; c < d; ++c) gg[c] += g[r * d + c] * normed[r * d + c];
                }
            }
            if (t.requires_grad(ib)) {
                Tensor& gb = t.grad(ib);
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t c = 0; c < d; ++c) gb[c] += g[r * d + c];
                }
            }
            if (t.requires_grad(ix)) {
                Tensor& gx = t.grad(ix);
                const Real inv_d = 1.0 / static_cast<Real>(d);
                for (std::size_t r = 0; r < n; ++r) {
                    Real mean_dh = 0.0, mean_dh_h = 0.0;
                    for (std::size_t c = 0; c < d; ++c) {
                        const Real dh = g[r * d + c] * gain_v[c];
                        mean_dh += dh;
                        mean_dh_h += dh * normed[r * d + c];
                    }
                    mean_dh *= inv_d;
                    mean_dh_h *= inv_d;
                    for (std::size_t c = 0; c < d; ++c) {
                        const Real dh = g[r * d + c] * gain_v[c];
                        gx[r * d + c] += inv_std[r] * (dh - mean_dh - normed[r * d + c] * mean_dh_h);
                    }
                }
            }
        });
}

Var gelu(const Var& x) {
    Tensor out = x.value();
    for (auto& v : out.data()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
    const std::size_t ix = x.index();
    return x.tape().record("gelu", std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& xv = t.value(ix);
        Tensor& gx = t.grad(ix);
        const Real inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
        for (std::size_t i = 0; i < gx.numel(); ++i) {
            const Real v = xv[i];
            const Real cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
            const Real pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
            gx[i] += g[i] * (cdf + v * pdf);
        }
    });
}

Var mean(const Var& x, std::size_t axis) {
    const Tensor& xv = x.value();
    if (axis >= xv.rank() || xv.rank() > 2) {
        throw ContractViolation("mean: axis " + std::to_string(axis) + " invalid for " + shape_to_string(xv.shape()));
    }
    const std::size_t ix = x.index();
    if (xv.rank() == 1) {
        Real acc = 0.0;
        for (auto v : xv.data()) acc += v;
        const std::size_t len = xv.numel();
        return x.tape().record("mean", Tensor::scalar(acc / static_cast<Real>(len)), {ix},
                               [ix, len](Tape& t, std::size_t self) {
                                   const Real g = t.grad(self)[0] / static_cast<Real>(len);
                                   for (auto& v : t.grad(ix).data()) v += g;
                               });
    }
    const std::size_t n = xv.dim(0), d = xv.dim(1);
    Tensor out({axis == 0 ? d : n}, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) out[axis == 0 ? c : r] += xv[r * d + c];
    }
    const Real denom = static_cast<Real>(axis == 0 ? n : d);
    for (auto& v : out.data()) v /= denom;
    return x.tape().record("mean", std::move(out), {ix}, [ix, n, d, axis, denom](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += g[axis == 0 ? c : r] / denom;
        }
    });
}

Var sum(const Var& x) {
    Real acc = 0.0;
    for (auto v : x.value().data()) acc += v;
    const std::size_t ix = x.index();
    return x.tape().record("sum", Tensor::scalar(acc), {ix}, [ix](Tape& t, std::size_t self) {
        const Real g = t.grad(self)[0];
        for (auto& v : t.grad(ix).data()) v += g;
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ContractViolation("concat_rows: no operands");
    const std::size_t d = parts[0].value().cols();
    std::size_t total = 0;
    std::vector<std::size_t> parents;
    for (const auto& p : parts) {
        require_same_tape(parts[0], p, "concat_rows");
        const Tensor& v = p.value();
        if (v.rank() > 2 || v.cols() != d) {
            throw ShapeError("concat_rows: part " + shape_to_string(v.shape()) + " does not have width " +
                             std::to_string(d));
        }
        total += row_count(v);
        parents.push_back(p.index());
    }
    std::vector<Real> data;
    data.reserve(total * d);
    for (const auto& p : parts) {
        const auto src = p.value().data();
        data.insert(data.end(), src.begin(), src.end());
    }
    auto ids = parents;
    return parts[0].tape().record("concat_rows", Tensor({total, d}, std::move(data)), std::move(parents),
                                  [ids = std::move(ids)](Tape& t, std::size_t self) {
                                      const Tensor& g = t.grad(self);
                                      std::size_t offset = 0;
                                      for (auto p : ids) {
                                          const std::size_t len = t.value(p).numel();
                                          if (t.requires_grad(p)) {
                                              Tensor& gp = t.grad(p);
                                              for (std::size_t i = 0; i < len; ++i) gp[i] += g[offset + i];
                                          }
                                          offset += len;
                                      }
                                  });
}

Var gather_rows(const Var& x, std::span<const std::size_t> indices) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2) throw ShapeError("gather_rows: expected a matrix, got " + shape_to_string(xv.shape()));
    if (indices.empty()) throw ContractViolation("gather_rows: empty index list");
    const std::size_t d = xv.dim(1);
    Tensor out({indices.size(), d});
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= xv.dim(0)) {
            throw ShapeError("gather_rows: row " + std::to_string(indices[k]) + " out of range for " +
                             shape_to_string(xv.shape()));
        }
        std::copy_n(xv.row(indices[k]).begin(), d, out.row(k).begin());
    }
    const std::size_t ix = x.index();
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return x.tape().record("gather_rows", std::move(out), {ix},
                           [ix, d, idx = std::move(idx)](Tape& t, std::size_t self) {
                               const Tensor& g = t.grad(self);
                               Tensor& gx = t.grad(ix);
                               for (std::size_t k = 0; k < idx.size(); ++k) {
                                   for (std::size_t c = 0; c < d; ++c) gx[idx[k] * d + c] += g[k * d + c];
                               }
                           });
}

Var take_row(const Var& x, std::size_t index) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || index >= xv.dim(0)) {
        throw ShapeError("take_row: row " + std::to_string(index) + " of " + shape_to_string(xv.shape()));
    }
    const std::size_t d = xv.dim(1);
    auto src = xv.row(index);
    Tensor out(Shape{d}, std::vector<Real>(src.begin(), src.end()));
    const std::size_t ix = x.index();
    return x.tape().record("take_row", std::move(out), {ix}, [ix, index, d](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t c = 0; c < d; ++c) gx[index * d + c] += g[c];
    });
}

Var reshape(const Var& x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    const std::size_t ix = x.index();
    return x.tape().record("reshape", std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
        accumulate(t.grad(ix), t.grad(self));
    });
}

Var cosine(const Var& a, const Var& b) {
    if (a.value().rank() != 1 || b.value().rank() != 1) {
        throw ShapeError("cosine: expected vectors, got " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
    }
    return cosine_rows(reshape(a, {1, a.value().numel()}), b);
}

Var cosine_rows(const Var& rows, const Var& b) {
    require_same_tape(rows, b, "cosine_rows");
    const Tensor& rv = rows.value();
    const Tensor& bv = b.value();
    if (rv.rank() != 2 || bv.rank() != 1 || rv.dim(1) != bv.dim(0)) {
        throw ShapeError("cosine_rows: cannot compare rows of " + shape_to_string(rv.shape()) + " with " +
                         shape_to_string(bv.shape()));
    }
    const std::size_t n = rv.dim(0);
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) out[i] = kernels::cosine(rv.row(i), bv.data());
    const std::size_t ir = rows.index(), ib = b.index();
    return rows.tape().record("cosine_rows", std::move(out), {ir, ib}, [ir, ib, n](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& rows_v = t.value(ir);
        const Tensor& b_v = t.value(ib);
        const std::size_t d = b_v.numel();
        const Real nb = std::sqrt(kernels::dot(b_v.data(), b_v.data()));
        for (std::size_t i = 0; i < n; ++i) {
            auto r = rows_v.row(i);
            const Real s = kernels::dot(r, b_v.data());
            const Real nr = std::sqrt(kernels::dot(r, r));
            const Real den = nr * nb + kCosineEps;
            const Real f_over_den = s / (den * den);
            if (t.requires_grad(ir)) {
                Tensor& gr = t.grad(ir);
                const Real radial = nr > 0.0 ? f_over_den * nb / nr : 0.0;
                for (std::size_t c = 0; c < d; ++c) gr[i * d + c] += g[i] * (b_v[c] / den - radial * r[c]);
            }
            if (t.requires_grad(ib)) {
                Tensor& gb = t.grad(ib);
                const Real radial = nb > 0.0 ? f_over_den * nr / nb : 0.0;
                for (std::size_t c = 0; c < d; ++c) gb[c] += g[i] * (r[c] / den - radial * b_v[c]);
            }
        }
    });
}

Var entropy(const Var& p) {
    const Real h = kernels::entropy(p.value());
    const std::size_t ip = p.index();
    return p.tape().record("entropy", Tensor::scalar(h), {ip}, [ip](Tape& t, std::size_t self) {
        const Real g = t.grad(self)[0];
        const Tensor& pv = t.value(ip);
        Tensor& gp = t.grad(ip);
        for (std::size_t i = 0; i < gp.numel(); ++i) {
            if (pv[i] > 0.0) gp[i] -= g * (std::log(pv[i]) + 1.0);
        }
    });
}

}  // namespace ad
}  // namespace mint
