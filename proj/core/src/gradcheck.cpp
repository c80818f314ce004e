// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mint/errors.hpp"

namespace mint {

GradcheckResult gradcheck(const DualEncoder& encoder, std::span<const Tensor> views, const MintParams& params,
                          const AdaptConfig& config, const GradcheckOptions& options) {
    if (!(options.step > 0.0) || !(options.floor > 0.0)) throw ConfigError("gradcheck: step and floor must be > 0");
    const auto queries = uses_bank(config.mode) ? view_queries(encoder, views) : std::vector<std::vector<Tensor>>{};
    ad::Tape tape;
    LossEvaluation eval = evaluate_loss(tape, encoder, views, queries, params, config);
    const GradientMap grads = tape.backward(eval.loss);

    GradcheckResult result;
    result.parameters = grads.size();
    MintParams probe = params;
    for (const auto& [id, analytic] : grads) {
        Parameter* p = probe.find(id);
        if (!p) throw ContractViolation("gradcheck: gradient for unknown parameter " + id);
        for (std::size_t i = 0; i < analytic.numel(); ++i) {
            const Real original = p->value[i];
            p->value[i] = original + options.step;
            const double up = loss_value(encoder, views, queries, probe, config, eval.plan);
            p->value[i] = original - options.step;
            const double down = loss_value(encoder, views, queries, probe, config, eval.plan);
            p->value[i] = original;
            const double numeric = (up - down) / (2.0 * options.step);
            const double a = analytic[i];
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
            ++result.entries;
            if (err > result.max_relative_error) {
                result.max_relative_error = err;
                result.worst = id + "[" + std::to_string(i) + "]";
            }
        }
    }
    result.passed = result.max_relative_error < options.tolerance;
    return result;
}

}  // namespace mint
