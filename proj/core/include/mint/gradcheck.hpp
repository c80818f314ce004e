// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference check of the adaptation loss gradient. The confidence selection
// and retrievals are pinned to those of the analytic pass so the loss is smooth in every
// perturbed entry.

#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "mint/adaptation.hpp"

namespace mint {

struct GradcheckOptions {
    double step = 1e-5;
    double tolerance = 1e-5;
    /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
    double floor = 1e-4;
};

struct GradcheckResult {
    std::size_t entries = 0;     ///< scalar entries compared
    std::size_t parameters = 0;  ///< leaves present in the gradient map
    double max_relative_error = 0.0;
    std::string worst;  ///< "<id>[<flat index>]" of the largest error
    bool passed = true;
};

GradcheckResult gradcheck(const DualEncoder& encoder, std::span<const Tensor> views, const MintParams& params,
                          const AdaptConfig& config, const GradcheckOptions& options = {});

}  // namespace mint
