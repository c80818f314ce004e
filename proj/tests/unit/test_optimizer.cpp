// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mint/errors.hpp"
#include "mint/optimizer.hpp"

namespace mint {
namespace {

struct Fixture {
    Parameter a{"a", Tensor::vector({1.0, -2.0, 0.5})};
    Parameter b{"b", Tensor::vector({3.0})};
    ParameterLookup lookup() {
        return [this](const std::string& id) -> Parameter* {
            if (id == "a") return &a;
            if (id == "b") return &b;
            return nullptr;
        };
    }
};

TEST(AdamW, MatchesReferenceRecurrence) {
    Fixture f;
    AdamWConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.weight_decay = 0.1;
    OptimizerState state;
    std::mt19937_64 rng(3);
    std::vector<double> p(f.a.value.values()), m(3, 0.0), v(3, 0.0);
    for (int t = 1; t <= 5; ++t) {
        const auto g = Tensor::randn({3}, rng);
        ASSERT_TRUE(adamw_step(cfg, {{"a", g}}, f.lookup(), state));
        for (std::size_t i = 0; i < 3; ++i) {
            p[i] *= 1.0 - cfg.learning_rate * cfg.weight_decay;
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            const double mh = m[i] / (1.0 - std::pow(0.9, t));
            const double vh = v[i] / (1.0 - std::pow(0.999, t));
            p[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + 1e-8);
            EXPECT_NEAR(f.a.value[i], p[i], 1e-14);
        }
    }
    EXPECT_EQ(state.step_count, 5u);
    EXPECT_EQ(state.moments.at("a").steps, 5u);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
    Fixture f;
    AdamWConfig cfg;
    OptimizerState state;
    ASSERT_TRUE(adamw_step(cfg, {{"b", Tensor::vector({0.3})}}, f.lookup(), state));
    EXPECT_NEAR(f.b.value[0], 3.0 - 5e-3, 1e-9);
}

TEST(AdamW, ZeroGradientWithoutDecayLeavesParametersUnchanged) {
    Fixture f;
    const Tensor before = f.a.value;
    OptimizerState state;
    ASSERT_TRUE(adamw_step({}, {{"a", Tensor({3}, 0.0)}}, f.lookup(), state));
    EXPECT_TRUE(f.a.value.bitwise_equal(before));
}

TEST(AdamW, PerParameterStepCounters) {
    Fixture f;
    OptimizerState state;
    adamw_step({}, {{"a", Tensor({3}, 1.0)}}, f.lookup(), state);
    adamw_step({}, {{"a", Tensor({3}, 1.0)}, {"b", Tensor({1}, 1.0)}}, f.lookup(), state);
    EXPECT_EQ(state.moments.at("a").steps, 2u);
    EXPECT_EQ(state.moments.at("b").steps, 1u);
    EXPECT_EQ(state.step_count, 2u);
    EXPECT_EQ(state.moments.at("a").first.shape(), f.a.value.shape());
}

TEST(AdamW, NonFiniteGradientRejectsWholeUpdate) {
    Fixture f;
    const Tensor a0 = f.a.value, b0 = f.b.value;
    OptimizerState state;
    const GradientMap g{{"a", Tensor({3}, 1.0)},
                        {"b", Tensor::vector({std::numeric_limits<double>::infinity()})}};
    EXPECT_FALSE(adamw_step({}, g, f.lookup(), state));
    EXPECT_TRUE(f.a.value.bitwise_equal(a0));
    EXPECT_TRUE(f.b.value.bitwise_equal(b0));
    EXPECT_TRUE(state.moments.empty());
    EXPECT_EQ(state.step_count, 0u);
}

TEST(AdamW, NonFiniteResultRejectsWholeUpdate) {
    Fixture f;
    f.b.value[0] = -1.5e308;
    const Tensor a0 = f.a.value, b0 = f.b.value;
    AdamWConfig cfg;
    cfg.learning_rate = 1e308;
    OptimizerState state;
    EXPECT_FALSE(adamw_step(cfg, {{"a", Tensor({3}, 1.0)}, {"b", Tensor({1}, 1.0)}}, f.lookup(), state));
    EXPECT_TRUE(f.a.value.bitwise_equal(a0));
    EXPECT_TRUE(f.b.value.bitwise_equal(b0));
    EXPECT_TRUE(state.moments.empty());
    EXPECT_EQ(state.step_count, 0u);
}

TEST(AdamW, RejectsMisuse) {
    Fixture f;
    OptimizerState state;
    EXPECT_THROW(adamw_step({}, {{"zzz", Tensor({1})}}, f.lookup(), state), ContractViolation);
    EXPECT_THROW(adamw_step({}, {{"a", Tensor({2})}}, f.lookup(), state), ShapeError);
    f.b.trainable = false;
    EXPECT_THROW(adamw_step({}, {{"b", Tensor({1})}}, f.lookup(), state), ContractViolation);
}

TEST(AdamW, ConfigValidation) {
    AdamWConfig c;
    EXPECT_NO_THROW(c.validate());
    c.learning_rate = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.beta1 = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.weight_decay = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace mint
