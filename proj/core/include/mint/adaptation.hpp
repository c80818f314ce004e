// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// Online test-time adaptation loop. For every incoming sample: build augmented views,
// run each view through the prompt-free encoder to collect hierarchical queries, retrieve
// and compose an associative prompt, re-encode with the prompt injected, keep the most
// confident views, and take an AdamW step on the entropy-minus-similarity loss. Only the
// text prompt, the bank, and (in ablations) a general visual prompt are ever updated.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mint/autodiff.hpp"
#include "mint/encoder.hpp"
#include "mint/memory_bank.hpp"
#include "mint/optimizer.hpp"

namespace mint {

enum class PersistencePolicy {
    Persistent,     ///< text prompt and bank carry across samples
    EpisodicText,   ///< text prompt resets per sample, bank persists
    FullyEpisodic,  ///< everything resets per sample
};

enum class AblationMode {
    Mint,                   ///< associative prompt + text prompt
    GeneralVisualPrompt,    ///< one static learnable visual prompt + text prompt
    TextOnly,               ///< text prompt only, no injection
    VisualOnlyGeneral,      ///< static visual prompt only
    VisualOnlyAssociative,  ///< associative prompt only
};

std::string to_string(PersistencePolicy policy);
std::string to_string(AblationMode mode);
PersistencePolicy parse_persistence(const std::string& name);
AblationMode parse_ablation_mode(const std::string& name);

bool uses_text_prompt(AblationMode mode);
bool uses_bank(AblationMode mode);
bool uses_general_prompt(AblationMode mode);

struct AdaptConfig {
    std::size_t views = 64;      ///< B
    double confidence = 0.10;    ///< kappa
    double reward_weight = 0.2;  ///< lambda
    std::size_t steps = 1;
    AdamWConfig optimizer{};
    PersistencePolicy persistence = PersistencePolicy::Persistent;
    AblationMode mode = AblationMode::Mint;

    std::size_t bank_size = 512;   ///< N_MPB
    std::size_t prompt_length = 2; ///< L_m
    std::size_t select = 3;        ///< N_sel
    UnionMode union_mode = UnionMode::Set;
    std::size_t injection_layer = 0;

    std::uint64_t seed = 0;  ///< prompt initialisation and augmentation

    void validate(const EncoderConfig& encoder) const;
};

/// m = max(1, floor(kappa * B)).
std::size_t confident_view_count(std::size_t views, double confidence);

/// Indices of the m lowest-entropy views (ties: lower index), returned in ascending order.
std::vector<std::size_t> confidence_select(std::span<const Real> entropies, double confidence);

/// Source row of every output patch for one random resized crop: a contiguous sub-grid covering
/// a fraction in [0.5, 1] of the area, aspect in [3/4, 4/3], resampled by nearest index.
std::vector<std::size_t> random_crop_rows(std::size_t grid, std::mt19937_64& rng);

/// View 0 is `x` unchanged; the rest are random resized crops of the patch grid resampled to
/// full size by nearest-index replication.
std::vector<Tensor> augment(const Tensor& x, std::size_t count, std::size_t grid, std::mt19937_64& rng);

/// All learnable state. Which leaves are trainable in a given step depends on the ablation mode.
struct MintParams {
    std::optional<Parameter> text_prompt;    ///< "text.prompt", absent when L_t == 0
    MemoryPromptBank bank;
    std::optional<Parameter> visual_prompt;  ///< "visual.prompt", general-prompt modes only

    /// Text prompt starts at the hand-crafted prompt; bank and visual prompt are N(0, 1).
    static MintParams init(const DualEncoder& encoder, const AdaptConfig& config);

    Parameter* find(const std::string& id);
    const Parameter* find(const std::string& id) const;

    NamedTensors to_named() const;
    bool bitwise_equal(const MintParams& other) const;
};

/// One view's forward pass on a tape.
struct ViewOutput {
    ad::Var probabilities;
    ad::Var entropy;
    std::vector<Tensor> queries;  ///< from the prompt-free pass
    RetrievalResult retrieval;    ///< empty unless the bank is in use
    std::vector<std::size_t> contributors;
};

/// Text features {K, D_I} for the current text prompt. The prompt is a trainable leaf only
/// when the mode tunes it and `trainable` is set.
ad::Var build_text_features(ad::Tape& tape, const DualEncoder& encoder, const MintParams& params,
                            const AdaptConfig& config, bool trainable = true);

/// Two-pass forward: prompt-free pass for queries, retrieval and composition, then the
/// injected pass for the prediction. `queries` and `retrieval` may be supplied to skip the
/// first pass or to pin the selection.
ViewOutput view_forward(ad::Tape& tape, const DualEncoder& encoder, const Tensor& view, const MintParams& params,
                        const AdaptConfig& config, const ad::Var& text_features, bool trainable = true,
                        const std::vector<Tensor>* queries = nullptr, const RetrievalResult* retrieval = nullptr);

/// mean_i [ H_i - lambda * R_i ] over the selected views. `rewards` is empty when no bank is used.
ad::Var mint_loss(std::span<const ad::Var> entropies, std::span<const ad::Var> rewards, double reward_weight);

/// Everything needed to re-evaluate a loss exactly: the views, which of them were kept,
/// and the retrievals that fed each kept view.
struct LossPlan {
    std::vector<std::size_t> selected_views;
    std::vector<RetrievalResult> retrievals;  ///< parallel to selected_views
};

struct LossEvaluation {
    ad::Var loss;
    std::vector<Tensor> view_probabilities;
    std::vector<Real> view_entropies;
    LossPlan plan;
    std::vector<std::vector<std::size_t>> contributors;  ///< parallel to plan.selected_views
};

/// Per-view queries from the prompt-free pass; they depend only on the frozen encoder.
std::vector<std::vector<Tensor>> view_queries(const DualEncoder& encoder, std::span<const Tensor> views);

/// Full loss over all views with confidence selection. With `plan`, only the planned views are
/// evaluated, with their pinned retrievals (used by finite differences and re-evaluation).
LossEvaluation evaluate_loss(ad::Tape& tape, const DualEncoder& encoder, std::span<const Tensor> views,
                             const std::vector<std::vector<Tensor>>& queries, const MintParams& params,
                             const AdaptConfig& config, const LossPlan* plan = nullptr);

/// Plain-value loss for a pinned plan.
double loss_value(const DualEncoder& encoder, std::span<const Tensor> views,
                  const std::vector<std::vector<Tensor>>& queries, const MintParams& params, const AdaptConfig& config,
                  const LossPlan& plan);

/// One optimizer update. Returns false (nothing applied) on non-finite gradients.
bool adapt_step(MintParams& params, OptimizerState& state, const GradientMap& gradients, const AdaptConfig& config);

/// Predicted class for the unmodified view; ties resolve to the lower class index.
std::size_t infer(const DualEncoder& encoder, const Tensor& x, const MintParams& params, const AdaptConfig& config,
                  Tensor* probabilities = nullptr, RetrievalResult* retrieval = nullptr);

struct StreamSample {
    std::size_t id = 0;
    Tensor input;
    std::optional<std::size_t> label;
    std::string domain;
};

struct Episode {
    std::size_t sample_id = 0;
    std::string domain;
    std::optional<std::size_t> label;
    std::vector<Tensor> view_probabilities;
    std::vector<Real> view_entropies;
    std::vector<std::size_t> selected_views;
    double pre_loss = 0.0;
    double post_loss = 0.0;
    std::size_t prediction = 0;
    bool correct = false;
    std::vector<RetrievalResult> selected_retrievals;  ///< parallel to selected_views
    RetrievalResult final_retrieval;                   ///< for the unmodified view after adaptation
    bool aborted = false;
    std::string abort_reason;
};

/// Called after every backward with the gradients and the plan that produced them.
using GradientObserver = std::function<void(const GradientMap&, const LossPlan&, const AdaptConfig&)>;

class AdaptationEngine {
public:
    AdaptationEngine(const DualEncoder& encoder, AdaptConfig config);
    AdaptationEngine(const DualEncoder& encoder, AdaptConfig config, MintParams initial);

    Episode process(const StreamSample& sample);
    std::vector<Episode> run_stream(std::span<const StreamSample> samples);

    const MintParams& params() const { return params_; }
    MintParams& params() { return params_; }
    const OptimizerState& optimizer_state() const { return optimizer_; }
    const AdaptConfig& config() const { return config_; }

    void set_gradient_observer(GradientObserver observer) { observer_ = std::move(observer); }

private:
    void apply_persistence();

    const DualEncoder& encoder_;
    AdaptConfig config_;
    MintParams initial_;
    MintParams params_;
    OptimizerState optimizer_;
    GradientObserver observer_;
};

}  // namespace mint
