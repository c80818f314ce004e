// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// mint: generate the synthetic benchmark, run methods and ablations, sweep
// hyperparameters and check gradients.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 I/O error, 3 gradient check failed.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mint/adaptation.hpp"
#include "mint/dataset.hpp"
#include "mint/errors.hpp"
#include "mint/gradcheck.hpp"
#include "mint/harness.hpp"
#include "mint/random.hpp"
#include "mint/report.hpp"
#include "mint/run_config.hpp"
#include "mint/tensor_io.hpp"
#include "mint/trace.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitGradcheck = 3;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config, "RunConfig JSON file (defaults apply when omitted)");
    cmd->add_option("--seed", flags.seed, "master seed, overrides the config");
    cmd->add_option("--out", flags.out, "output directory, overrides the config");
}

mint::RunConfig resolve(const CommonFlags& flags) {
    mint::RunConfig config = flags.config.empty() ? mint::RunConfig{} : mint::load_run_config(flags.config);
    if (flags.seed) config.seed = *flags.seed;
    if (!flags.out.empty()) config.output.directory = flags.out;
    config.validate();
    return config;
}

fs::path prepare_output(const mint::RunConfig& config) {
    std::error_code ec;
    fs::create_directories(config.output.directory, ec);
    if (ec) throw mint::IoError("cannot create " + config.output.directory.string() + ": " + ec.message());
    return config.output.directory;
}

std::string snapshot_name(const std::string& method) {
    std::string name = "params." + method + ".tensors";
    for (auto& c : name) {
        if (c == '+' || c == '[' || c == ']' || c == '=') c = '_';
    }
    return name;
}

/// Writes the trace and snapshots as each method finishes, then the report.
int run_and_write(const mint::RunConfig& config, const std::function<mint::RunReport(const mint::MethodSink&)>& run) {
    const fs::path dir = prepare_output(config);
    mint::TraceWriter trace(dir / config.output.trace);
    const auto report = run([&](const std::string& method, const mint::MethodRun& result) {
        for (const auto& e : result.episodes) trace.write(e, method);
        if (config.output.snapshots && result.final_params) {
            mint::save_tensors(dir / snapshot_name(method), result.final_params->to_named());
        }
        std::clog << "[mint] " << method << " done (" << result.episodes.size() << " episodes)\n";
    });
    trace.flush();
    mint::emit_report(report, dir / config.output.report);
    std::cout << mint::format_report(report);
    return 0;
}

int cmd_generate(const CommonFlags& flags) {
    const auto config = resolve(flags);
    const mint::DualEncoder encoder(config.resolved_encoder());
    const mint::Dataset data = mint::generate_dataset(encoder, config.resolved_dataset());
    const fs::path dir = prepare_output(config);
    mint::NamedTensors tensors;
    std::ofstream manifest(dir / "dataset.jsonl", std::ios::binary | std::ios::trunc);
    if (!manifest) throw mint::IoError("cannot write " + (dir / "dataset.jsonl").string());
    for (const auto& s : data.samples) {
        tensors.emplace_back("sample." + std::to_string(s.id), s.input);
        manifest << "{\"domain\":\"" << s.domain << "\",\"id\":" << s.id << ",\"label\":" << *s.label << "}\n";
    }
    for (std::size_t k = 0; k < data.prototypes.size(); ++k) {
        tensors.emplace_back("prototype." + std::to_string(k), data.prototypes[k]);
    }
    manifest.flush();
    if (!manifest) throw mint::IoError("failed writing dataset manifest");
    mint::save_tensors(dir / "dataset.tensors", tensors);
    std::cout << "samples " << data.samples.size() << ", domains " << data.domains.size() << ", clean zero-shot "
              << data.clean_accuracy << ", attempts " << data.attempts << '\n';
    return 0;
}

int cmd_run(const CommonFlags& flags) {
    const auto config = resolve(flags);
    return run_and_write(config, [&](const mint::MethodSink& sink) { return mint::run_experiment(config, sink); });
}

int cmd_ablate(const CommonFlags& flags) {
    auto config = resolve(flags);
    config.methods = mint::known_methods();
    return run_and_write(config, [&](const mint::MethodSink& sink) { return mint::run_experiment(config, sink); });
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) throw mint::ConfigError("empty entry in --values");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw mint::ConfigError("not a number in --values: '" + item + "'");
        }
        if (used != item.size()) throw mint::ConfigError("not a number in --values: '" + item + "'");
        values.push_back(v);
    }
    if (values.empty()) throw mint::ConfigError("--values needs at least one value");
    return values;
}

int cmd_sweep(const CommonFlags& flags, const std::string& param, const std::string& values_text) {
    const auto config = resolve(flags);
    const auto values = parse_values(values_text);
    return run_and_write(config,
                         [&](const mint::MethodSink& sink) { return mint::sweep(param, values, config, sink); });
}

int cmd_gradcheck(const CommonFlags& flags, const std::string& method, std::size_t views, double tolerance) {
    const auto config = resolve(flags);
    const mint::DualEncoder encoder(config.resolved_encoder());
    mint::AdaptConfig adapt = config.resolved_adapt();
    const auto mode = mint::method_mode(method);
    if (!mode) throw mint::ConfigError("gradcheck needs an adaptive method");
    adapt.mode = *mode;
    if (views > 0) adapt.views = views;
    adapt.validate(encoder.config());
    const auto params = mint::MintParams::init(encoder, adapt);

    std::mt19937_64 rng(mint::derive_seed(config.seed, 77));
    const auto& ec = encoder.config();
    const auto input = mint::Tensor::randn({ec.patches(), ec.patch_dim}, rng);
    const auto batch = mint::augment(input, adapt.views, ec.grid, rng);
    mint::GradcheckOptions options;
    options.tolerance = tolerance;
    const auto result = mint::gradcheck(encoder, batch, params, adapt, options);
    std::cout << "gradcheck " << method << ": " << result.entries << " entries over " << result.parameters
              << " leaves, max relative error " << result.max_relative_error;
    if (!result.worst.empty()) std::cout << " at " << result.worst;
    std::cout << (result.passed ? " PASS" : " FAIL") << '\n';
    return result.passed ? 0 : kExitGradcheck;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Memory-infused prompt tuning at test time on a toy dual encoder"};
    app.require_subcommand(1);

    CommonFlags generate_flags, run_flags, ablate_flags, sweep_flags, grad_flags;
    auto* generate = app.add_subcommand("generate", "write the synthetic benchmark stream");
    add_common(generate, generate_flags);
    auto* run = app.add_subcommand("run", "run the configured methods and write the report");
    add_common(run, run_flags);
    auto* ablate = app.add_subcommand("ablate", "run zero-shot and every ablation row");
    add_common(ablate, ablate_flags);

    auto* sweep = app.add_subcommand("sweep", "sweep one hyperparameter");
    add_common(sweep, sweep_flags);
    std::string sweep_param, sweep_values;
    sweep->add_option("--param", sweep_param, "N_MPB, L_m, N_sel, injection-layer, lambda or kappa")
        ->required()
        ->check(CLI::IsMember(mint::sweep_parameters()));
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();

    auto* grad = app.add_subcommand("gradcheck", "compare reverse-mode and finite-difference gradients");
    add_common(grad, grad_flags);
    std::string grad_method = "mint";
    std::size_t grad_views = 8;
    double grad_tolerance = 1e-5;
    grad->add_option("--method", grad_method, "adaptive method whose loss is checked");
    grad->add_option("--views", grad_views, "augmented views (0 keeps the config value)");
    grad->add_option("--tolerance", grad_tolerance, "maximum relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*generate) return cmd_generate(generate_flags);
        if (*run) return cmd_run(run_flags);
        if (*ablate) return cmd_ablate(ablate_flags);
        if (*sweep) return cmd_sweep(sweep_flags, sweep_param, sweep_values);
        if (*grad) return cmd_gradcheck(grad_flags, grad_method, grad_views, grad_tolerance);
    } catch (const mint::IoError& e) {
        std::cerr << "mint: " << e.what() << '\n';
        return kExitIo;
    } catch (const mint::Error& e) {
        std::cerr << "mint: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
