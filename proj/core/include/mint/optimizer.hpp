// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "mint/autodiff.hpp"

namespace mint {

struct AdamWConfig {
    double learning_rate = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;

    void validate() const;
};

struct OptimizerState {
    struct Moments {
        Tensor first;
        Tensor second;
        std::uint64_t steps = 0;
    };
    std::map<std::string, Moments> moments;
    std::uint64_t step_count = 0;
};

using ParameterLookup = std::function<Parameter*(const std::string&)>;

/// True when every gradient entry is finite.
bool gradients_finite(const GradientMap& gradients);

/// Decoupled-weight-decay Adam step with bias-corrected moments. Only parameters present in
/// `gradients` are touched; each keeps its own step count. Returns false, leaving parameters
/// and state unchanged, when any gradient or updated value is non-finite.
bool adamw_step(const AdamWConfig& config, const GradientMap& gradients, const ParameterLookup& lookup,
                OptimizerState& state);

}  // namespace mint
