// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mint/autodiff.hpp"
#include "mint/errors.hpp"
#include "oracles.hpp"

namespace mint {
namespace {

using ad::Tape;
using ad::Var;

TEST(Matmul, IdentityTimesColumn) {
    Tape tape;
    auto a = tape.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    auto b = tape.constant(Tensor::matrix(2, 1, {3, 4}));
    const auto& c = ad::matmul(a, b).value();
    ASSERT_EQ(c.shape(), (Shape{2, 1}));
    EXPECT_EQ(c[0], 3.0);
    EXPECT_EQ(c[1], 4.0);
}

TEST(Matmul, RowTimesColumn) {
    Tape tape;
    auto c = ad::matmul(tape.constant(Tensor::matrix(1, 2, {1, 2})), tape.constant(Tensor::matrix(2, 1, {3, 4})));
    EXPECT_EQ(c.value().item(), 11.0);
}

TEST(Matmul, MatchesTripleLoop) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = Tensor::randn({3, 4}, rng);
        const auto b = Tensor::randn({4, 2}, rng);
        EXPECT_LE(max_abs_difference(kernels::matmul(a, b), oracle::naive_matmul(a, b)), 1e-12);
    }
}

TEST(Matmul, ShapeErrorNamesBothShapes) {
    Tape tape;
    auto a = tape.constant(Tensor({2, 3}));
    auto b = tape.constant(Tensor({2, 3}));
    try {
        ad::matmul(a, b);
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
    }
}

TEST(Softmax, UniformOnZeros) {
    const auto p = kernels::softmax(Tensor::vector({0, 0, 0}), 0);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LogInputs) {
    const auto p = kernels::softmax(Tensor::vector({std::log(1.0), std::log(2.0), std::log(3.0)}), 0);
    EXPECT_NEAR(p[0], 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(p[1], 2.0 / 6.0, 1e-15);
    EXPECT_NEAR(p[2], 3.0 / 6.0, 1e-15);
}

TEST(Softmax, MatchesDirectFormula) {
    std::mt19937_64 rng(5);
    const auto x = Tensor::randn({5}, rng);
    const auto p = kernels::softmax(x, 0);
    const auto ref = oracle::softmax(x.values());
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(p[i], ref[i], 1e-12);
}

TEST(Softmax, RowsSumToOneAndIgnoreShift) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto x = Tensor::randn({4, 7}, rng, 5.0);
        const auto p = kernels::softmax(x, 1);
        const double shift = std::uniform_real_distribution<double>(-50, 50)(rng);
        for (auto& v : x.data()) v += shift;
        const auto q = kernels::softmax(x, 1);
        for (std::size_t r = 0; r < 4; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < 7; ++c) s += p.at(r, c);
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
        EXPECT_LE(max_abs_difference(p, q), 1e-9);
    }
}

TEST(Softmax, ColumnAxis) {
    const auto p = kernels::softmax(Tensor::matrix(2, 2, {0, 1, 0, 1}), 0);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], 0.5, 1e-15);
}

TEST(Softmax, LargeInputsStayFinite) {
    const auto p = kernels::softmax(Tensor::vector({1000, 1000, -1000}), 0);
    EXPECT_NEAR(p[0], 0.5, 1e-15);
    EXPECT_EQ(p[2], 0.0);
}

TEST(Cosine, IdenticalOrthogonalAntipodal) {
    const std::vector<Real> a{1, 2, 3}, neg{-1, -2, -3}, e1{1, 0}, e2{0, 1};
    EXPECT_NEAR(kernels::cosine(a, a), 1.0, 1e-12);
    EXPECT_NEAR(kernels::cosine(a, neg), -1.0, 1e-12);
    EXPECT_EQ(kernels::cosine(e1, e2), 0.0);
}

TEST(Cosine, ZeroNormIsZero) {
    const std::vector<Real> z{0, 0, 0}, a{1, 2, 3};
    EXPECT_EQ(kernels::cosine(z, a), 0.0);
    EXPECT_EQ(kernels::cosine(z, z), 0.0);
}

TEST(Cosine, BoundedAndScaleInvariant) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> pos(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = Tensor::randn({6}, rng);
        auto b = Tensor::randn({6}, rng);
        const double c = kernels::cosine(a.data(), b.data());
        EXPECT_LE(std::abs(c), 1.0 + 1e-9);
        const double alpha = pos(rng), beta = pos(rng);
        for (auto& v : a.data()) v *= alpha;
        for (auto& v : b.data()) v *= beta;
        EXPECT_NEAR(kernels::cosine(a.data(), b.data()), c, 1e-9);
    }
}

TEST(Cosine, LengthMismatchThrows) {
    Tape tape;
    EXPECT_THROW(ad::cosine(tape.constant(Tensor({3})), tape.constant(Tensor({4}))), ShapeError);
}

TEST(Entropy, AnalyticValues) {
    Tensor one_hot({5}, 0.0);
    one_hot[2] = 1.0;
    EXPECT_EQ(kernels::entropy(one_hot), 0.0);
    EXPECT_NEAR(kernels::entropy(Tensor({200}, 1.0 / 200.0)), std::log(200.0), 1e-12);
    EXPECT_NEAR(kernels::entropy(Tensor::vector({0.5, 0.5, 0, 0})), std::log(2.0), 1e-15);
    EXPECT_NEAR(std::log(200.0), 5.2983, 1e-4);
}

TEST(Entropy, RejectsNonDistributions) {
    EXPECT_THROW(kernels::entropy(Tensor::vector({0.5, 0.6})), ContractViolation);
    EXPECT_THROW(kernels::entropy(Tensor::vector({1.5, -0.5})), ContractViolation);
}

TEST(Entropy, UniformIsMaximal) {
    std::mt19937_64 rng(21);
    for (std::size_t k : {2u, 3u, 7u, 10u, 50u}) {
        const double top = kernels::entropy(Tensor({k}, 1.0 / static_cast<double>(k)));
        for (int trial = 0; trial < 50; ++trial) {
            const auto p = kernels::softmax(Tensor::randn({k}, rng, 2.0), 0);
            EXPECT_LE(kernels::entropy(p), top + 1e-12);
        }
    }
}

TEST(Backward, SquaredNormGivesTwiceTheLeaf) {
    std::mt19937_64 rng(1);
    Parameter p{"p", Tensor::randn({5}, rng)};
    Tape tape;
    auto x = tape.parameter(p);
    const auto grads = tape.backward(ad::sum(ad::mul(x, x)));
    ASSERT_EQ(grads.size(), 1u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(grads.at("p")[i], 2.0 * p.value[i]);
}

TEST(Backward, EntropyOfSoftmaxMatchesFiniteDifferences) {
    std::mt19937_64 rng(2);
    Parameter w{"W", Tensor::randn({4, 6}, rng)};
    const Tensor q = Tensor::randn({6, 1}, rng);
    auto loss_of = [&](const Tensor& wv) {
        const auto logits = kernels::matmul(wv, q).reshaped({4});
        return kernels::entropy(kernels::softmax(logits, 0));
    };
    Tape tape;
    auto logits = ad::reshape(ad::matmul(tape.parameter(w), tape.constant(q)), {4});
    const auto grads = tape.backward(ad::entropy(ad::softmax(logits, 0)));
    const auto numeric = oracle::central_difference(loss_of, w.value, 1e-5);
    oracle::GradientComparison cmp;
    oracle::compare_gradient("W", grads.at("W"), numeric, 1e-8, cmp);
    EXPECT_LT(cmp.max_relative_error, 1e-6) << cmp.worst;
}

TEST(Backward, FrozenLeavesNeverAppear) {
    std::mt19937_64 rng(4);
    Parameter a{"a", Tensor::randn({3}, rng)};
    Parameter b{"b", Tensor::randn({3}, rng), false};
    Tape tape;
    const auto grads = tape.backward(ad::sum(ad::mul(tape.parameter(a), tape.parameter(b))));
    EXPECT_EQ(grads.count("a"), 1u);
    EXPECT_EQ(grads.count("b"), 0u);
}

TEST(Backward, UnreachableLeavesAbsent) {
    Parameter a{"a", Tensor({2}, 1.0)};
    Parameter b{"b", Tensor({2}, 1.0)};
    Tape tape;
    auto av = tape.parameter(a);
    tape.parameter(b);
    const auto grads = tape.backward(ad::sum(av));
    EXPECT_EQ(grads.size(), 1u);
    EXPECT_EQ(grads.count("a"), 1u);
}

TEST(Backward, RepeatedLeafAccumulates) {
    Parameter a{"a", Tensor::vector({1.0, -2.0})};
    Tape tape;
    auto x1 = tape.parameter(a);
    auto x2 = tape.parameter(a);
    EXPECT_EQ(x1.index(), x2.index());
    const auto grads = tape.backward(ad::sum(ad::add(x1, ad::scale(x2, 3.0))));
    EXPECT_EQ(grads.at("a")[0], 4.0);
    EXPECT_EQ(grads.at("a")[1], 4.0);
}

TEST(Backward, NonScalarLossIsRejected) {
    Parameter a{"a", Tensor({3}, 1.0)};
    Tape tape;
    EXPECT_THROW(tape.backward(tape.parameter(a)), ContractViolation);
}

TEST(Backward, TapeIsSingleUse) {
    Parameter a{"a", Tensor({1}, 2.0)};
    Tape tape;
    auto loss = ad::sum(tape.parameter(a));
    tape.backward(loss);
    EXPECT_THROW(tape.backward(loss), ContractViolation);
}

TEST(Numerics, NonFiniteValuesAreRejected) {
    Tape tape;
    EXPECT_THROW(tape.constant(Tensor::vector({1.0, std::numeric_limits<double>::quiet_NaN()})), NumericError);
    auto big = tape.constant(Tensor::vector({1e300}));
    EXPECT_THROW(ad::mul(big, big), NumericError);
}

TEST(Numerics, GradientShapesMatchLeaves) {
    std::mt19937_64 rng(6);
    Parameter w{"w", Tensor::randn({3, 4}, rng)};
    Parameter v{"v", Tensor::randn({4}, rng)};
    Tape tape;
    auto h = ad::add_row(ad::matmul(tape.constant(Tensor::randn({2, 3}, rng)), tape.parameter(w)), tape.parameter(v));
    const auto grads = tape.backward(ad::sum(ad::gelu(h)));
    EXPECT_EQ(grads.at("w").shape(), w.value.shape());
    EXPECT_EQ(grads.at("v").shape(), v.value.shape());
}

// Per-op gradient check: the op output is contracted with a fixed random tensor so every
// output entry contributes to the scalar.
struct OpCase {
    std::string name;
    std::vector<Shape> inputs;
    std::function<Var(Tape&, const std::vector<Var>&)> op;
    double input_scale = 1.0;
};

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
    const OpCase& c = GetParam();
    std::mt19937_64 rng(std::hash<std::string>{}(c.name));
    std::vector<Parameter> params;
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
        params.push_back({"x" + std::to_string(i), Tensor::randn(c.inputs[i], rng, c.input_scale)});
    }
    std::optional<Tensor> weights;
    auto evaluate = [&](const std::vector<Parameter>& ps, GradientMap* grads) {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& p : ps) vars.push_back(tape.parameter(p));
        auto out = c.op(tape, vars);
        if (!weights) weights = Tensor::randn(out.shape(), rng);
        auto loss = ad::sum(ad::mul(out, tape.constant(*weights)));
        const double value = loss.value().item();
        if (grads) *grads = tape.backward(loss);
        return value;
    };
    GradientMap grads;
    evaluate(params, &grads);
    oracle::GradientComparison cmp;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto f = [&](const Tensor& x) {
            auto probe = params;
            probe[i].value = x;
            return evaluate(probe, nullptr);
        };
        const auto numeric = oracle::central_difference(f, params[i].value, 1e-5);
        oracle::compare_gradient(params[i].id, grads.at(params[i].id), numeric, 1e-6, cmp);
    }
    EXPECT_LT(cmp.max_relative_error, 1e-5) << c.name << " worst at " << cmp.worst;
}

std::vector<OpCase> op_cases() {
    using V = const std::vector<Var>&;
    return {
        {"add", {{3, 4}, {3, 4}}, [](Tape&, V x) { return ad::add(x[0], x[1]); }},
        {"sub", {{5}, {5}}, [](Tape&, V x) { return ad::sub(x[0], x[1]); }},
        {"mul", {{3, 4}, {3, 4}}, [](Tape&, V x) { return ad::mul(x[0], x[1]); }},
        {"scale", {{4}}, [](Tape&, V x) { return ad::scale(x[0], -2.5); }},
        {"add_n", {{2, 3}, {2, 3}, {2, 3}}, [](Tape&, V x) { return ad::add_n(x); }},
        {"add_row", {{3, 4}, {4}}, [](Tape&, V x) { return ad::add_row(x[0], x[1]); }},
        {"matmul", {{3, 4}, {4, 2}}, [](Tape&, V x) { return ad::matmul(x[0], x[1]); }},
        {"transpose", {{3, 2}}, [](Tape&, V x) { return ad::transpose(x[0]); }},
        {"softmax_rows", {{3, 5}}, [](Tape&, V x) { return ad::softmax(x[0], 1); }},
        {"softmax_cols", {{3, 5}}, [](Tape&, V x) { return ad::softmax(x[0], 0); }},
        {"softmax_vector", {{6}}, [](Tape&, V x) { return ad::softmax(x[0], 0); }},
        {"layer_norm", {{3, 6}, {6}, {6}}, [](Tape&, V x) { return ad::layer_norm(x[0], x[1], x[2]); }},
        {"layer_norm_vector", {{5}, {5}, {5}}, [](Tape&, V x) { return ad::layer_norm(x[0], x[1], x[2]); }},
        {"gelu", {{4, 3}}, [](Tape&, V x) { return ad::gelu(x[0]); }, 2.0},
        {"mean_rows", {{4, 3}}, [](Tape&, V x) { return ad::mean(x[0], 0); }},
        {"mean_cols", {{4, 3}}, [](Tape&, V x) { return ad::mean(x[0], 1); }},
        {"mean_vector", {{7}}, [](Tape&, V x) { return ad::mean(x[0], 0); }},
        {"sum", {{2, 5}}, [](Tape&, V x) { return ad::sum(x[0]); }},
        {"concat_rows", {{2, 3}, {3}, {1, 3}}, [](Tape&, V x) { return ad::concat_rows(x); }},
        {"gather_rows",
         {{5, 3}},
         [](Tape&, V x) {
             const std::vector<std::size_t> idx{4, 0, 4, 2};
             return ad::gather_rows(x[0], idx);
         }},
        {"take_row", {{4, 3}}, [](Tape&, V x) { return ad::take_row(x[0], 2); }},
        {"reshape", {{2, 6}}, [](Tape&, V x) { return ad::reshape(x[0], {3, 4}); }},
        {"cosine", {{6}, {6}}, [](Tape&, V x) { return ad::cosine(x[0], x[1]); }},
        {"cosine_rows", {{4, 5}, {5}}, [](Tape&, V x) { return ad::cosine_rows(x[0], x[1]); }},
        {"entropy_of_softmax", {{6}}, [](Tape&, V x) { return ad::entropy(ad::softmax(x[0], 0)); }},
        {"attention_block",
         {{4, 6}, {6, 3}, {6, 3}},
         [](Tape&, V x) {
             auto q = ad::matmul(x[0], x[1]);
             auto k = ad::matmul(x[0], x[2]);
             return ad::matmul(ad::softmax(ad::matmul(q, ad::transpose(k)), 1), q);
         }},
    };
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(op_cases()),
                         [](const ::testing::TestParamInfo<OpCase>& info) { return info.param.name; });

}  // namespace
}  // namespace mint
