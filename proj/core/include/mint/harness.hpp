// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner: method table, per-domain accuracy, hyperparameter sweeps.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mint/adaptation.hpp"
#include "mint/dataset.hpp"
#include "mint/encoder.hpp"
#include "mint/report.hpp"
#include "mint/run_config.hpp"

namespace mint {

/// Ablation mode behind an adaptive method name; empty for zero-shot. Throws ConfigError
/// on names outside known_methods().
std::optional<AblationMode> method_mode(const std::string& method);

struct MethodRun {
    std::vector<ReportRow> rows;  ///< one per dataset domain, in dataset order
    std::vector<Episode> episodes;
    std::optional<MintParams> final_params;  ///< absent for zero-shot
};

/// Runs one method over the whole stream with a fresh engine. Zero-shot predicts with the
/// hand-crafted prompt and reports mean prediction entropy as its loss.
MethodRun run_method(const std::string& method, const DualEncoder& encoder, const Dataset& data,
                     const AdaptConfig& adapt);

/// Per-method hook for traces and snapshots.
using MethodSink = std::function<void(const std::string& method, const MethodRun& run)>;

/// All configured methods on one generated dataset.
RunReport run_experiment(const RunConfig& config, const MethodSink& sink = {});

/// Hyperparameters accepted by sweep().
const std::vector<std::string>& sweep_parameters();

/// Applies one sweep value to a config; integer parameters reject fractional values.
RunConfig with_parameter(const RunConfig& config, const std::string& parameter, double value);

/// Label such as "mint[N_MPB=64]".
std::string sweep_label(const std::string& method, const std::string& parameter, double value);

/// One row group per value, methods relabelled with sweep_label(). The fingerprint covers
/// the base config.
RunReport sweep(const std::string& parameter, std::span<const double> values, const RunConfig& config,
                const MethodSink& sink = {});

}  // namespace mint
