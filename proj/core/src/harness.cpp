// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/harness.hpp"

#include <cmath>
#include <cstdio>

#include "mint/errors.hpp"

namespace mint {

std::optional<AblationMode> method_mode(const std::string& method) {
    if (method == "zero-shot") return std::nullopt;
    if (method == "text-only") return AblationMode::TextOnly;
    if (method == "visual-only-general") return AblationMode::VisualOnlyGeneral;
    if (method == "visual-only-associative") return AblationMode::VisualOnlyAssociative;
    if (method == "text+general") return AblationMode::GeneralVisualPrompt;
    if (method == "mint") return AblationMode::Mint;
    throw ConfigError("unknown method '" + method + "'");
}

namespace {

std::vector<ReportRow> domain_rows(const std::string& method, const Dataset& data,
                                   const std::vector<Episode>& episodes) {
    std::vector<ReportRow> rows;
    for (const auto& domain : data.domains) {
        ReportRow row{method, domain, 0.0, 0.0, 0};
        std::size_t correct = 0;
        double loss = 0.0;
        for (const auto& e : episodes) {
            if (e.domain != domain) continue;
            ++row.episodes;
            if (e.correct) ++correct;
            loss += e.pre_loss;
        }
        if (row.episodes > 0) {
            const auto n = static_cast<double>(row.episodes);
            row.top1 = static_cast<double>(correct) / n;
            row.mean_loss = loss / n;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<Episode> zero_shot_episodes(const DualEncoder& encoder, const Dataset& data) {
    std::vector<Episode> out;
    out.reserve(data.samples.size());
    for (const auto& s : data.samples) {
        Episode e;
        e.sample_id = s.id;
        e.domain = s.domain;
        e.label = s.label;
        const Tensor p = encoder.zero_shot_predict(s.input);
        e.pre_loss = e.post_loss = kernels::entropy(p);
        e.prediction = argmax(p);
        e.correct = s.label && *s.label == e.prediction;
        e.view_probabilities.push_back(p);
        e.view_entropies.push_back(e.pre_loss);
        e.selected_views.push_back(0);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

MethodRun run_method(const std::string& method, const DualEncoder& encoder, const Dataset& data,
                     const AdaptConfig& adapt) {
    const auto mode = method_mode(method);
    MethodRun run;
    if (!mode) {
        run.episodes = zero_shot_episodes(encoder, data);
    } else {
        AdaptConfig config = adapt;
        config.mode = *mode;
        AdaptationEngine engine(encoder, config);
        run.episodes = engine.run_stream(data.samples);
        run.final_params = engine.params();
    }
    run.rows = domain_rows(method, data, run.episodes);
    return run;
}

RunReport run_experiment(const RunConfig& config, const MethodSink& sink) {
    config.validate();
    const DualEncoder encoder(config.resolved_encoder());
    const Dataset data = generate_dataset(encoder, config.resolved_dataset());
    const AdaptConfig adapt = config.resolved_adapt();
    RunReport report;
    report.fingerprint = fingerprint(config);
    for (const auto& method : config.methods) {
        MethodRun run = run_method(method, encoder, data, adapt);
        if (sink) sink(method, run);
        report.rows.insert(report.rows.end(), run.rows.begin(), run.rows.end());
    }
    return report;
}

const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> names{"N_MPB", "L_m", "N_sel", "injection-layer", "lambda", "kappa"};
    return names;
}

namespace {

bool integer_parameter(const std::string& p) {
    return p == "N_MPB" || p == "L_m" || p == "N_sel" || p == "injection-layer";
}

std::size_t as_count(const std::string& parameter, double value) {
    if (!std::isfinite(value) || value < 0.0 || std::floor(value) != value) {
        throw ConfigError(parameter + " takes non-negative integers, got " + std::to_string(value));
    }
    return static_cast<std::size_t>(value);
}

}  // namespace

RunConfig with_parameter(const RunConfig& config, const std::string& parameter, double value) {
    RunConfig c = config;
    if (parameter == "N_MPB") {
        c.adapt.bank_size = as_count(parameter, value);
    } else if (parameter == "L_m") {
        c.adapt.prompt_length = as_count(parameter, value);
    } else if (parameter == "N_sel") {
        c.adapt.select = as_count(parameter, value);
    } else if (parameter == "injection-layer") {
        c.adapt.injection_layer = as_count(parameter, value);
    } else if (parameter == "lambda") {
        c.adapt.reward_weight = value;
    } else if (parameter == "kappa") {
        c.adapt.confidence = value;
    } else {
        throw ConfigError("cannot sweep '" + parameter + "'");
    }
    c.validate();
    return c;
}

std::string sweep_label(const std::string& method, const std::string& parameter, double value) {
    char buf[64];
    if (integer_parameter(parameter)) {
        std::snprintf(buf, sizeof buf, "%zu", as_count(parameter, value));
    } else {
        std::snprintf(buf, sizeof buf, "%g", value);
    }
    return method + "[" + parameter + "=" + buf + "]";
}

RunReport sweep(const std::string& parameter, std::span<const double> values, const RunConfig& config,
                const MethodSink& sink) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<RunConfig> variants;
    for (double v : values) variants.push_back(with_parameter(config, parameter, v));

    // Weights and data do not depend on the swept adaptation parameters.
    const DualEncoder encoder(config.resolved_encoder());
    const Dataset data = generate_dataset(encoder, config.resolved_dataset());
    RunReport report;
    report.fingerprint = fingerprint(config);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const AdaptConfig adapt = variants[i].resolved_adapt();
        for (const auto& method : config.methods) {
            MethodRun run = run_method(method, encoder, data, adapt);
            const std::string label = sweep_label(method, parameter, values[i]);
            for (auto& row : run.rows) row.method = label;
            if (sink) sink(label, run);
            report.rows.insert(report.rows.end(), run.rows.begin(), run.rows.end());
        }
    }
    return report;
}

}  // namespace mint
