// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/optimizer.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "mint/errors.hpp"

namespace mint {

void AdamWConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("optimizer eps must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
}

bool gradients_finite(const GradientMap& gradients) {
    for (const auto& [id, g] : gradients) {
        if (!g.all_finite()) return false;
    }
    return true;
}

bool adamw_step(const AdamWConfig& config, const GradientMap& gradients, const ParameterLookup& lookup,
                OptimizerState& state) {
    if (!gradients_finite(gradients)) return false;
    struct Staged {
        Parameter* param;
        Tensor value;
        OptimizerState::Moments moments;
    };
    std::vector<std::pair<std::string, Staged>> staged;
    staged.reserve(gradients.size());
    for (const auto& [id, g] : gradients) {
        Parameter* param = lookup(id);
        if (param == nullptr) throw ContractViolation("optimizer: unknown parameter '" + id + "'");
        if (!param->trainable) throw ContractViolation("optimizer: parameter '" + id + "' is frozen");
        if (param->value.shape() != g.shape()) {
            throw ShapeError("optimizer: gradient for '" + id + "' has shape " + shape_to_string(g.shape()) +
                             ", parameter has " + shape_to_string(param->value.shape()));
        }
        OptimizerState::Moments m;
        if (auto it = state.moments.find(id); it != state.moments.end()) {
            m = it->second;
        } else {
            m.first = Tensor(g.shape(), 0.0);
            m.second = Tensor(g.shape(), 0.0);
        }
        ++m.steps;
        const double t = static_cast<double>(m.steps);
        const double bias1 = 1.0 - std::pow(config.beta1, t);
        const double bias2 = 1.0 - std::pow(config.beta2, t);
        Tensor p = param->value;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            p[i] -= config.learning_rate * config.weight_decay * p[i];
            m.first[i] = config.beta1 * m.first[i] + (1.0 - config.beta1) * g[i];
            m.second[i] = config.beta2 * m.second[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double first_hat = m.first[i] / bias1;
            const double second_hat = m.second[i] / bias2;
            p[i] -= config.learning_rate * first_hat / (std::sqrt(second_hat) + config.eps);
        }
        if (!p.all_finite() || !m.first.all_finite() || !m.second.all_finite()) return false;
        staged.push_back({id, {param, std::move(p), std::move(m)}});
    }
    for (auto& [id, s] : staged) {
        s.param->value = std::move(s.value);
        state.moments[id] = std::move(s.moments);
    }
    ++state.step_count;
    return true;
}

}  // namespace mint
