// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "mint/errors.hpp"

namespace mint {

const ReportRow* RunReport::find(const std::string& method, const std::string& domain) const {
    for (const auto& r : rows) {
        if (r.method == method && r.domain == domain) return &r;
    }
    return nullptr;
}

std::string format_report(const RunReport& report) {
    std::vector<const ReportRow*> sorted;
    sorted.reserve(report.rows.size());
    for (const auto& r : report.rows) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const ReportRow* a, const ReportRow* b) {
        return a->method != b->method ? a->method < b->method : a->domain < b->domain;
    });
    std::string out = "method,domain,top1,mean_loss,episodes\n";
    char buf[96];
    for (const ReportRow* r : sorted) {
        std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%zu\n", r->top1, r->mean_loss, r->episodes);
        out += r->method + "," + r->domain + buf;
    }
    out += "# config-fingerprint " + report.fingerprint + "\n";
    return out;
}

void emit_report(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open report " + path.string() + " for writing");
    out << format_report(report);
    out.flush();
    if (!out) throw IoError("failed writing report " + path.string());
}

}  // namespace mint
