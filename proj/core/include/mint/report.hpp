// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace mint {

struct ReportRow {
    std::string method;
    std::string domain;
    double top1 = 0.0;       ///< in [0, 1]
    double mean_loss = 0.0;  ///< mean pre-update episode loss
    std::size_t episodes = 0;
};

struct RunReport {
    std::vector<ReportRow> rows;
    std::string fingerprint;

    const ReportRow* find(const std::string& method, const std::string& domain) const;
};

/// CSV text: header, rows sorted by (method, domain) with four decimals, then a
/// `# config-fingerprint <hex>` line.
std::string format_report(const RunReport& report);

/// Throws IoError when the file cannot be written.
void emit_report(const RunReport& report, const std::filesystem::path& path);

}  // namespace mint
