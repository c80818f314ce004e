// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mint/adaptation.hpp"
#include "mint/dataset.hpp"
#include "mint/encoder.hpp"

namespace mint {

struct OutputPaths {
    std::filesystem::path directory = "mint-out";
    std::string report = "report.csv";
    std::string trace = "episodes.jsonl";
    bool snapshots = true;  ///< write the adapted parameters of every method as named tensors
};

/// Everything a run depends on. Sub-seeds for weights, data and adaptation all derive from
/// `seed`, so the seed fields inside the nested configs are never read from a file.
struct RunConfig {
    std::uint64_t seed = 0;
    EncoderConfig encoder;
    AdaptConfig adapt;
    DatasetSpec dataset;
    std::vector<std::string> methods{"zero-shot", "text-only", "text+general", "mint"};
    OutputPaths output;

    /// Copies with the derived sub-seeds filled in.
    EncoderConfig resolved_encoder() const;
    AdaptConfig resolved_adapt() const;
    DatasetSpec resolved_dataset() const;

    void validate() const;
};

/// Method names accepted by the harness.
const std::vector<std::string>& known_methods();

/// Strict parse: unknown keys, wrong types and out-of-range values raise ConfigError.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON with every field present and keys sorted.
std::string to_json(const RunConfig& config);

/// FNV-1a 64 of the canonical JSON without the output section, as 16 lowercase hex digits.
std::string fingerprint(const RunConfig& config);

}  // namespace mint
