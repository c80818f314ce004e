// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mint/errors.hpp"
#include "mint/harness.hpp"
#include "mint/report.hpp"
#include "mint/run_config.hpp"
#include "mint/trace.hpp"
#include "oracles.hpp"

namespace mint {
namespace {

namespace fs = std::filesystem;

RunConfig small_run() {
    RunConfig c;
    c.seed = 5;
    c.encoder = oracle::tiny_encoder();
    c.encoder.num_classes = 4;
    c.encoder.grid = 3;
    c.adapt = oracle::tiny_adapt();
    c.adapt.bank_size = 16;
    c.adapt.select = 2;
    c.dataset.samples_per_class = 3;
    c.dataset.refine_steps = 20;
    c.dataset.domains = {{"clean", {}}, {"occluded", {{ShiftKind::PatchDropout, 0.3}}}};
    c.methods = known_methods();
    return c;
}

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("mint_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TEST(RunConfig, DefaultsParseFromEmptyObject) {
    const auto c = parse_run_config("{}");
    EXPECT_EQ(to_json(c), to_json(RunConfig{}));
}

TEST(RunConfig, CanonicalJsonRoundTrips) {
    const auto c = small_run();
    const auto text = to_json(c);
    EXPECT_EQ(to_json(parse_run_config(text)), text);
    EXPECT_EQ(fingerprint(parse_run_config(text)), fingerprint(c));
}

TEST(RunConfig, StrictParsing) {
    EXPECT_THROW(parse_run_config("{\"sed\": 1}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"encoder\": {\"image_dims\": 8}}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"adapt\": {\"views\": -1}}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"adapt\": {\"views\": 1.5}}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"adapt\": {\"persistence\": \"sometimes\"}}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"adapt\": {\"union_mode\": \"bag\"}}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"methods\": [\"tpt\"]}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"methods\": [\"mint\", \"mint\"]}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"dataset\": {\"domains\": [{\"name\": \"a\", \"shifts\": [{\"kind\": "
                                  "\"blur\", \"value\": 1}]}]}}"),
                 ConfigError);
    EXPECT_THROW(parse_run_config("{\"encoder\": {\"heads\": 3}}"), ConfigError);
    EXPECT_THROW(parse_run_config("not json"), ConfigError);
    EXPECT_THROW(load_run_config("/nonexistent/config.json"), IoError);
}

TEST(RunConfig, FingerprintTracksContentNotOutput) {
    auto a = small_run();
    auto b = a;
    b.output.directory = "elsewhere";
    b.output.snapshots = false;
    EXPECT_EQ(fingerprint(a), fingerprint(b));
    b.adapt.reward_weight = 0.3;
    EXPECT_NE(fingerprint(a), fingerprint(b));
    EXPECT_EQ(fingerprint(a).size(), 16u);
}

TEST(RunConfig, SubSeedsDeriveFromMaster) {
    auto a = small_run();
    auto b = a;
    b.seed = 6;
    EXPECT_NE(a.resolved_encoder().weight_seed, b.resolved_encoder().weight_seed);
    EXPECT_NE(a.resolved_adapt().seed, b.resolved_adapt().seed);
    EXPECT_NE(a.resolved_dataset().seed, b.resolved_dataset().seed);
    EXPECT_EQ(a.resolved_dataset().seed, small_run().resolved_dataset().seed);
}

TEST(Report, EmptyReportIsHeaderAndFingerprint) {
    RunReport r;
    r.fingerprint = "00000000deadbeef";
    EXPECT_EQ(format_report(r), "method,domain,top1,mean_loss,episodes\n# config-fingerprint 00000000deadbeef\n");
}

TEST(Report, FourDecimalsAndSortedRows) {
    RunReport r;
    r.fingerprint = "0123456789abcdef";
    r.rows = {{"zero-shot", "b", 0.8312, 1.23456, 10}, {"mint", "b", 1.0, 0.5, 10}, {"mint", "a", 0.0, 2.0, 3}};
    EXPECT_EQ(format_report(r),
              "method,domain,top1,mean_loss,episodes\n"
              "mint,a,0.0000,2.0000,3\n"
              "mint,b,1.0000,0.5000,10\n"
              "zero-shot,b,0.8312,1.2346,10\n"
              "# config-fingerprint 0123456789abcdef\n");
    EXPECT_EQ(r.find("mint", "b")->top1, 1.0);
    EXPECT_EQ(r.find("mint", "c"), nullptr);
}

TEST(Report, UnwritablePathRaisesIoError) {
    EXPECT_THROW(emit_report({}, "/nonexistent-dir/report.csv"), IoError);
}

TEST(Trace, EpisodeRecordFields) {
    Episode e;
    e.sample_id = 7;
    e.domain = "clean";
    e.label = 2;
    e.pre_loss = 1.5;
    e.post_loss = 1.25;
    e.selected_views = {0, 3};
    e.selected_retrievals = {{{{{4, 1}, {0.9, 0.8}}}}, {{{{2, 1}, {0.7, 0.6}}}}};
    e.final_retrieval = {{{{4, 2}, {0.9, 0.7}}}};
    e.prediction = 2;
    e.correct = true;
    const auto j = nlohmann::json::parse(episode_to_json(e, "mint"));
    EXPECT_EQ(j["method"], "mint");
    EXPECT_EQ(j["sample_id"], 7);
    EXPECT_EQ(j["label"], 2);
    EXPECT_EQ(j["selected_views"], nlohmann::json::array({0, 3}));
    EXPECT_EQ(j["selected_retrievals"][1][0], nlohmann::json::array({2, 1}));
    EXPECT_EQ(j["final_retrieval"][0], nlohmann::json::array({4, 2}));
    EXPECT_EQ(j["correct"], true);
    EXPECT_EQ(j["aborted"], false);
    EXPECT_FALSE(j.contains("abort_reason"));
    e.label.reset();
    e.aborted = true;
    e.abort_reason = "non-finite gradient";
    const auto k = nlohmann::json::parse(episode_to_json(e, "mint"));
    EXPECT_TRUE(k["label"].is_null());
    EXPECT_EQ(k["abort_reason"], "non-finite gradient");
    EXPECT_EQ(episode_to_json(e, "mint").find('\n'), std::string::npos);
}

TEST(Trace, WriterRejectsBadPath) {
    EXPECT_THROW(TraceWriter("/nonexistent-dir/t.jsonl"), IoError);
}

TEST(Harness, MethodNames) {
    EXPECT_FALSE(method_mode("zero-shot").has_value());
    EXPECT_EQ(*method_mode("text+general"), AblationMode::GeneralVisualPrompt);
    EXPECT_EQ(*method_mode("visual-only-associative"), AblationMode::VisualOnlyAssociative);
    EXPECT_THROW(method_mode("coop"), ConfigError);
    EXPECT_EQ(known_methods().size(), 6u);
}

class HarnessRun : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        config_ = new RunConfig(small_run());
        encoder_ = new DualEncoder(config_->resolved_encoder());
        data_ = new Dataset(generate_dataset(*encoder_, config_->resolved_dataset()));
    }
    static void TearDownTestSuite() {
        delete data_;
        delete encoder_;
        delete config_;
    }
    static RunConfig* config_;
    static DualEncoder* encoder_;
    static Dataset* data_;
};

RunConfig* HarnessRun::config_ = nullptr;
DualEncoder* HarnessRun::encoder_ = nullptr;
Dataset* HarnessRun::data_ = nullptr;

TEST_F(HarnessRun, ZeroShotRowIsZeroShotAccuracy) {
    const auto run = run_method("zero-shot", *encoder_, *data_, config_->resolved_adapt());
    ASSERT_EQ(run.rows.size(), 2u);
    for (const auto& row : run.rows) {
        std::vector<StreamSample> subset;
        for (const auto& s : data_->samples) {
            if (s.domain == row.domain) subset.push_back(s);
        }
        EXPECT_EQ(row.top1, zero_shot_accuracy(*encoder_, subset));
        EXPECT_EQ(row.episodes, subset.size());
    }
    EXPECT_FALSE(run.final_params.has_value());
}

TEST_F(HarnessRun, RowsAreMethodsTimesDomains) {
    const auto report = run_experiment(*config_);
    EXPECT_EQ(report.rows.size(), config_->methods.size() * config_->dataset.domains.size());
    for (const auto& r : report.rows) {
        EXPECT_GE(r.top1, 0.0);
        EXPECT_LE(r.top1, 1.0);
    }
    EXPECT_EQ(report.fingerprint, fingerprint(*config_));
}

TEST_F(HarnessRun, SingleValueSweepEqualsRunMethod) {
    auto c = *config_;
    c.methods = {"mint", "zero-shot"};
    const std::vector<double> values{static_cast<double>(c.adapt.bank_size)};
    const auto swept = sweep("N_MPB", values, c);
    for (const auto& method : c.methods) {
        const auto direct = run_method(method, *encoder_, *data_, c.resolved_adapt());
        for (const auto& row : direct.rows) {
            const auto* s = swept.find(sweep_label(method, "N_MPB", values[0]), row.domain);
            ASSERT_NE(s, nullptr);
            EXPECT_EQ(s->top1, row.top1);
            EXPECT_EQ(s->mean_loss, row.mean_loss);
            EXPECT_EQ(s->episodes, row.episodes);
        }
    }
}

TEST_F(HarnessRun, SweepProducesOneGroupPerValue) {
    auto c = *config_;
    c.methods = {"mint"};
    const std::vector<double> values{1, 2, 4};
    const auto report = sweep("L_m", values, c);
    EXPECT_EQ(report.rows.size(), values.size() * c.dataset.domains.size());
    EXPECT_NE(report.find("mint[L_m=4]", "clean"), nullptr);
    EXPECT_THROW(sweep("L_m", std::vector<double>{}, c), ConfigError);
    EXPECT_THROW(sweep("L_m", std::vector<double>{1.5}, c), ConfigError);
    EXPECT_THROW(sweep("depth", std::vector<double>{1}, c), ConfigError);
    EXPECT_THROW(sweep("N_sel", std::vector<double>{17}, c), ConfigError);
}

TEST(Harness, SweepLabelsAndParameters) {
    EXPECT_EQ(sweep_label("mint", "N_MPB", 64), "mint[N_MPB=64]");
    EXPECT_EQ(sweep_label("mint", "lambda", 0.25), "mint[lambda=0.25]");
    const auto c = with_parameter(small_run(), "kappa", 0.5);
    EXPECT_EQ(c.adapt.confidence, 0.5);
    EXPECT_EQ(with_parameter(small_run(), "injection-layer", 1).adapt.injection_layer, 1u);
    EXPECT_THROW(with_parameter(small_run(), "injection-layer", 2), ConfigError);
    EXPECT_EQ(sweep_parameters().size(), 6u);
}

TEST(Harness, AblationConsistencyWithoutTextPrompt) {
    auto c = small_run();
    c.encoder.text_prompt_length = 0;
    c.dataset.min_clean_accuracy = 0.3;
    const DualEncoder enc(c.resolved_encoder());
    const auto data = generate_dataset(enc, c.resolved_dataset());
    const auto assoc = run_method("visual-only-associative", enc, data, c.resolved_adapt());
    const auto mint = run_method("mint", enc, data, c.resolved_adapt());
    ASSERT_EQ(assoc.rows.size(), mint.rows.size());
    for (std::size_t i = 0; i < assoc.rows.size(); ++i) {
        EXPECT_EQ(assoc.rows[i].top1, mint.rows[i].top1);
        EXPECT_EQ(assoc.rows[i].mean_loss, mint.rows[i].mean_loss);
    }
}

TEST(Harness, ByteIdenticalReportsAndTraces) {
    const auto c = small_run();
    auto run_once = [&](const std::string& tag) {
        const auto dir = temp_dir(tag);
        std::ostringstream trace;
        const auto report = run_experiment(c, [&](const std::string& method, const MethodRun& run) {
            for (const auto& e : run.episodes) trace << episode_to_json(e, method) << '\n';
        });
        emit_report(report, dir / "report.csv");
        std::ifstream in(dir / "report.csv", std::ios::binary);
        std::stringstream csv;
        csv << in.rdbuf();
        fs::remove_all(dir);
        return std::make_pair(csv.str(), trace.str());
    };
    const auto a = run_once("a");
    const auto b = run_once("b");
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    EXPECT_FALSE(a.second.empty());
}

}  // namespace
}  // namespace mint
