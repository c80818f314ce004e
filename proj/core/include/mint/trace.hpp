// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// Episode traces: one JSON object per line.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "mint/adaptation.hpp"

namespace mint {

/// Sample id, domain, label, pre/post loss, selected views with their per-layer retrievals,
/// the final retrieval, prediction, correctness and abort status.
std::string episode_to_json(const Episode& episode, const std::string& method);

class TraceWriter {
public:
    /// Truncates `path`; throws IoError when it cannot be opened.
    explicit TraceWriter(const std::filesystem::path& path);

    void write(const Episode& episode, const std::string& method);
    void flush();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace mint
