// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/adaptation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <numeric>

#include "mint/errors.hpp"
#include "mint/random.hpp"

namespace mint {

std::string to_string(PersistencePolicy policy) {
    switch (policy) {
        case PersistencePolicy::Persistent: return "persistent";
        case PersistencePolicy::EpisodicText: return "episodic-text";
        case PersistencePolicy::FullyEpisodic: return "fully-episodic";
    }
    return "unknown";
}

std::string to_string(AblationMode mode) {
    switch (mode) {
        case AblationMode::Mint: return "mint";
        case AblationMode::GeneralVisualPrompt: return "general-visual-prompt";
        case AblationMode::TextOnly: return "text-only";
        case AblationMode::VisualOnlyGeneral: return "visual-only-general";
        case AblationMode::VisualOnlyAssociative: return "visual-only-associative";
    }
    return "unknown";
}

PersistencePolicy parse_persistence(const std::string& name) {
    if (name == "persistent") return PersistencePolicy::Persistent;
    if (name == "episodic-text") return PersistencePolicy::EpisodicText;
    if (name == "fully-episodic") return PersistencePolicy::FullyEpisodic;
    throw ConfigError("unknown persistence policy '" + name + "'");
}

AblationMode parse_ablation_mode(const std::string& name) {
    if (name == "mint") return AblationMode::Mint;
    if (name == "general-visual-prompt" || name == "text+general") return AblationMode::GeneralVisualPrompt;
    if (name == "text-only") return AblationMode::TextOnly;
    if (name == "visual-only-general") return AblationMode::VisualOnlyGeneral;
    if (name == "visual-only-associative") return AblationMode::VisualOnlyAssociative;
    throw ConfigError("unknown ablation mode '" + name + "'");
}

bool uses_text_prompt(AblationMode mode) {
    return mode == AblationMode::Mint || mode == AblationMode::GeneralVisualPrompt || mode == AblationMode::TextOnly;
}

bool uses_bank(AblationMode mode) {
    return mode == AblationMode::Mint || mode == AblationMode::VisualOnlyAssociative;
}

bool uses_general_prompt(AblationMode mode) {
    return mode == AblationMode::GeneralVisualPrompt || mode == AblationMode::VisualOnlyGeneral;
}

void AdaptConfig::validate(const EncoderConfig& encoder) const {
    if (views == 0) throw ConfigError("views must be at least 1");
    if (!(confidence > 0.0 && confidence <= 1.0)) throw ConfigError("confidence fraction must lie in (0, 1]");
    if (!(reward_weight >= 0.0) || !std::isfinite(reward_weight)) throw ConfigError("reward weight must be >= 0");
    if (steps == 0) throw ConfigError("steps per sample must be at least 1");
    optimizer.validate();
    if (bank_size == 0 || prompt_length == 0) throw ConfigError("bank size and prompt length must be positive");
    if (select == 0 || select > bank_size) {
        throw ConfigError("select must lie in [1, bank_size], got " + std::to_string(select));
    }
    if (injection_layer >= encoder.image_depth) {
        throw ConfigError("injection layer " + std::to_string(injection_layer) + " beyond image depth " +
                          std::to_string(encoder.image_depth));
    }
}

std::size_t confident_view_count(std::size_t views, double confidence) {
    // The small offset keeps products such as 0.7 * 10 from flooring to 6.
    const auto m = static_cast<std::size_t>(std::floor(confidence * static_cast<double>(views) + 1e-9));
    return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(views, 1));
}

std::vector<std::size_t> confidence_select(std::span<const Real> entropies, double confidence) {
    if (entropies.empty()) throw ContractViolation("confidence_select: no views");
    const std::size_t m = confident_view_count(entropies.size(), confidence);
    std::vector<std::size_t> order(entropies.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return entropies[a] < entropies[b]; });
    order.resize(m);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<std::size_t> random_crop_rows(std::size_t grid, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> area(0.5, 1.0);
    std::uniform_real_distribution<double> log_ratio(std::log(3.0 / 4.0), std::log(4.0 / 3.0));
    const double g = static_cast<double>(grid);
    const double scale = area(rng);
    const double aspect = std::exp(log_ratio(rng));
    const auto h = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(g * std::sqrt(scale * aspect))), 1, grid);
    const auto w = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(g * std::sqrt(scale / aspect))), 1, grid);
    const std::size_t top = std::uniform_int_distribution<std::size_t>(0, grid - h)(rng);
    const std::size_t left = std::uniform_int_distribution<std::size_t>(0, grid - w)(rng);
    std::vector<std::size_t> rows(grid * grid);
    for (std::size_t i = 0; i < grid; ++i) {
        for (std::size_t j = 0; j < grid; ++j) rows[i * grid + j] = (top + i * h / grid) * grid + left + j * w / grid;
    }
    return rows;
}

std::vector<Tensor> augment(const Tensor& x, std::size_t count, std::size_t grid, std::mt19937_64& rng) {
    if (count == 0) throw ContractViolation("augment: at least one view required");
    if (x.rank() != 2 || x.dim(0) != grid * grid) {
        throw ShapeError("augment: input " + shape_to_string(x.shape()) + " is not a " + std::to_string(grid) + "x" +
                         std::to_string(grid) + " patch grid");
    }
    std::vector<Tensor> views;
    views.reserve(count);
    views.push_back(x);
    for (std::size_t v = 1; v < count; ++v) {
        const auto rows = random_crop_rows(grid, rng);
        Tensor view(x.shape());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto src = x.row(rows[r]);
            std::copy(src.begin(), src.end(), view.row(r).begin());
        }
        views.push_back(std::move(view));
    }
    return views;
}

MintParams MintParams::init(const DualEncoder& encoder, const AdaptConfig& config) {
    const EncoderConfig& ec = encoder.config();
    config.validate(ec);
    MintParams p{std::nullopt,
                 MemoryPromptBank::init(config.bank_size, config.prompt_length, ec.image_dim,
                                        derive_seed(config.seed, 1)),
                 std::nullopt};
    if (const auto& hand = encoder.weights().hand_prompt) {
        p.text_prompt = Parameter{"text.prompt", *hand, uses_text_prompt(config.mode)};
    }
    const bool bank_trainable = uses_bank(config.mode);
    for (std::size_t i = 0; i < p.bank.size(); ++i) {
        p.bank.key(i).trainable = bank_trainable;
        p.bank.value(i).trainable = bank_trainable;
    }
    if (uses_general_prompt(config.mode)) {
        std::mt19937_64 rng(derive_seed(config.seed, 2));
        p.visual_prompt = Parameter{"visual.prompt", Tensor::randn({config.prompt_length, ec.image_dim}, rng), true};
    }
    return p;
}

namespace {

std::optional<std::size_t> parse_index(const std::string& id, std::string_view prefix) {
    if (id.size() <= prefix.size() || id.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
    std::size_t index = 0;
    const char* first = id.data() + prefix.size();
    const char* last = id.data() + id.size();
    auto [ptr, ec] = std::from_chars(first, last, index);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return index;
}

}  // namespace

Parameter* MintParams::find(const std::string& id) {
    return const_cast<Parameter*>(std::as_const(*this).find(id));
}

const Parameter* MintParams::find(const std::string& id) const {
    if (text_prompt && id == text_prompt->id) return &*text_prompt;
    if (visual_prompt && id == visual_prompt->id) return &*visual_prompt;
    if (auto i = parse_index(id, "mpb.key."); i && *i < bank.size()) return &bank.key(*i);
    if (auto i = parse_index(id, "mpb.value."); i && *i < bank.size()) return &bank.value(*i);
    return nullptr;
}

NamedTensors MintParams::to_named() const {
    NamedTensors out = bank.to_named();
    if (text_prompt) out.emplace_back(text_prompt->id, text_prompt->value);
    if (visual_prompt) out.emplace_back(visual_prompt->id, visual_prompt->value);
    return out;
}

bool MintParams::bitwise_equal(const MintParams& other) const {
    const auto a = to_named();
    const auto b = other.to_named();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].first != b[i].first || !a[i].second.bitwise_equal(b[i].second)) return false;
    }
    return true;
}

namespace {

ad::Var leaf(ad::Tape& tape, const Parameter& p, bool trainable) {
    return trainable ? tape.parameter(p) : tape.constant_ref(p.value);
}

}  // namespace

ad::Var build_text_features(ad::Tape& tape, const DualEncoder& encoder, const MintParams& params,
                            const AdaptConfig& config, bool trainable) {
    if (!params.text_prompt) return encoder.text_features(tape, nullptr);
    auto prompt = leaf(tape, *params.text_prompt, trainable && uses_text_prompt(config.mode));
    return encoder.text_features(tape, &prompt);
}

ViewOutput view_forward(ad::Tape& tape, const DualEncoder& encoder, const Tensor& view, const MintParams& params,
                        const AdaptConfig& config, const ad::Var& text_features, bool trainable,
                        const std::vector<Tensor>* queries, const RetrievalResult* retrieval) {
    ViewOutput out;
    ad::Var injected;
    bool inject = false;
    if (uses_bank(config.mode)) {
        out.queries = queries ? *queries : encoder.encode_image(view).queries;
        out.retrieval = retrieval ? *retrieval : retrieve(params.bank, out.queries, config.select);
        auto composed = compose(tape, params.bank, out.retrieval, config.union_mode, trainable);
        injected = composed.prompt;
        out.contributors = std::move(composed.contributors);
        inject = true;
    } else if (uses_general_prompt(config.mode)) {
        if (!params.visual_prompt) throw ContractViolation("general visual prompt mode without a visual prompt");
        injected = leaf(tape, *params.visual_prompt, trainable);
        inject = true;
    }
    ImageEncodeOptions options;
    options.injection_layer = config.injection_layer;
    TracedImage image = encoder.encode_image(tape, view, inject ? &injected : nullptr, options);
    out.probabilities = predict(image.feature, text_features, encoder.config().temperature);
    out.entropy = ad::entropy(out.probabilities);
    return out;
}

ad::Var mint_loss(std::span<const ad::Var> entropies, std::span<const ad::Var> rewards, double reward_weight) {
    if (entropies.empty()) throw ContractViolation("mint_loss: no selected views");
    if (!rewards.empty() && rewards.size() != entropies.size()) {
        throw ContractViolation("mint_loss: " + std::to_string(rewards.size()) + " rewards for " +
                                std::to_string(entropies.size()) + " views");
    }
    std::vector<ad::Var> terms;
    terms.reserve(entropies.size());
    for (std::size_t i = 0; i < entropies.size(); ++i) {
        if (rewards.empty() || reward_weight == 0.0) {
            terms.push_back(entropies[i]);
        } else {
            terms.push_back(ad::sub(entropies[i], ad::scale(rewards[i], reward_weight)));
        }
    }
    return ad::scale(ad::add_n(terms), 1.0 / static_cast<double>(terms.size()));
}

std::vector<std::vector<Tensor>> view_queries(const DualEncoder& encoder, std::span<const Tensor> views) {
    std::vector<std::vector<Tensor>> out;
    out.reserve(views.size());
    for (const auto& v : views) out.push_back(encoder.encode_image(v).queries);
    return out;
}

namespace {

LossEvaluation evaluate_planned(ad::Tape& tape, const DualEncoder& encoder, std::span<const Tensor> views,
                                const std::vector<std::vector<Tensor>>& queries, const MintParams& params,
                                const AdaptConfig& config, const LossPlan& plan, bool trainable) {
    const bool bank = uses_bank(config.mode);
    if (!plan.retrievals.empty() && plan.retrievals.size() != plan.selected_views.size()) {
        throw ContractViolation("loss plan retrievals do not match its selected views");
    }
    auto text = build_text_features(tape, encoder, params, config, trainable);
    LossEvaluation eval;
    eval.plan.selected_views = plan.selected_views;
    std::vector<ad::Var> entropies, rewards;
    for (std::size_t s = 0; s < plan.selected_views.size(); ++s) {
        const std::size_t v = plan.selected_views[s];
        if (v >= views.size()) throw ContractViolation("loss plan references view " + std::to_string(v));
        const std::vector<Tensor>* q = bank && v < queries.size() ? &queries[v] : nullptr;
        const RetrievalResult* pinned = plan.retrievals.empty() ? nullptr : &plan.retrievals[s];
        ViewOutput out = view_forward(tape, encoder, views[v], params, config, text, trainable, q, pinned);
        eval.view_probabilities.push_back(out.probabilities.value());
        eval.view_entropies.push_back(out.entropy.value().item());
        entropies.push_back(out.entropy);
        if (bank && config.reward_weight > 0.0) {
            rewards.push_back(similarity_reward(tape, out.queries, params.bank, out.retrieval, trainable));
        }
        eval.plan.retrievals.push_back(std::move(out.retrieval));
        eval.contributors.push_back(std::move(out.contributors));
    }
    eval.loss = mint_loss(entropies, rewards, config.reward_weight);
    return eval;
}

}  // namespace

LossEvaluation evaluate_loss(ad::Tape& tape, const DualEncoder& encoder, std::span<const Tensor> views,
                             const std::vector<std::vector<Tensor>>& queries, const MintParams& params,
                             const AdaptConfig& config, const LossPlan* plan) {
    if (plan) return evaluate_planned(tape, encoder, views, queries, params, config, *plan, true);

    // Score every view without recording gradients, then rebuild only the kept views on the tape.
    std::vector<Tensor> probabilities;
    std::vector<Real> entropies;
    std::vector<RetrievalResult> retrievals;
    {
        ad::Tape scratch;
        auto text = build_text_features(scratch, encoder, params, config, false);
        const bool bank = uses_bank(config.mode);
        for (std::size_t v = 0; v < views.size(); ++v) {
            const std::vector<Tensor>* q = bank && v < queries.size() ? &queries[v] : nullptr;
            ViewOutput out = view_forward(scratch, encoder, views[v], params, config, text, false, q);
            probabilities.push_back(out.probabilities.value());
            entropies.push_back(out.entropy.value().item());
            retrievals.push_back(std::move(out.retrieval));
        }
    }
    LossPlan selected;
    selected.selected_views = confidence_select(entropies, config.confidence);
    for (auto v : selected.selected_views) selected.retrievals.push_back(retrievals[v]);
    LossEvaluation eval = evaluate_planned(tape, encoder, views, queries, params, config, selected, true);
    eval.view_probabilities = std::move(probabilities);
    eval.view_entropies = std::move(entropies);
    return eval;
}

double loss_value(const DualEncoder& encoder, std::span<const Tensor> views,
                  const std::vector<std::vector<Tensor>>& queries, const MintParams& params, const AdaptConfig& config,
                  const LossPlan& plan) {
    ad::Tape tape;
    return evaluate_planned(tape, encoder, views, queries, params, config, plan, false).loss.value().item();
}

bool adapt_step(MintParams& params, OptimizerState& state, const GradientMap& gradients, const AdaptConfig& config) {
    return adamw_step(config.optimizer, gradients, [&params](const std::string& id) { return params.find(id); },
                      state);
}

std::size_t infer(const DualEncoder& encoder, const Tensor& x, const MintParams& params, const AdaptConfig& config,
                  Tensor* probabilities, RetrievalResult* retrieval) {
    ad::Tape tape;
    auto text = build_text_features(tape, encoder, params, config, false);
    ViewOutput out = view_forward(tape, encoder, x, params, config, text, false);
    if (probabilities) *probabilities = out.probabilities.value();
    if (retrieval) *retrieval = std::move(out.retrieval);
    return argmax(out.probabilities.value());
}

AdaptationEngine::AdaptationEngine(const DualEncoder& encoder, AdaptConfig config)
    : AdaptationEngine(encoder, config, MintParams::init(encoder, config)) {}

AdaptationEngine::AdaptationEngine(const DualEncoder& encoder, AdaptConfig config, MintParams initial)
    : encoder_(encoder), config_(std::move(config)), initial_(initial), params_(std::move(initial)) {
    config_.validate(encoder_.config());
}

void AdaptationEngine::apply_persistence() {
    switch (config_.persistence) {
        case PersistencePolicy::Persistent:
            break;
        case PersistencePolicy::EpisodicText:
            params_.text_prompt = initial_.text_prompt;
            if (initial_.text_prompt) optimizer_.moments.erase(initial_.text_prompt->id);
            break;
        case PersistencePolicy::FullyEpisodic:
            params_ = initial_;
            optimizer_ = OptimizerState{};
            break;
    }
}

Episode AdaptationEngine::process(const StreamSample& sample) {
    apply_persistence();
    const MintParams params_before = params_;
    const OptimizerState optimizer_before = optimizer_;

    Episode ep;
    ep.sample_id = sample.id;
    ep.domain = sample.domain;
    ep.label = sample.label;

    std::mt19937_64 rng(derive_seed(config_.seed, sample.id));
    const auto views = augment(sample.input, config_.views, encoder_.config().grid, rng);
    std::vector<std::vector<Tensor>> queries;
    if (uses_bank(config_.mode)) queries = view_queries(encoder_, views);

    auto roll_back = [&](const std::string& reason) {
        params_ = params_before;
        optimizer_ = optimizer_before;
        ep.aborted = true;
        ep.abort_reason = reason;
        std::clog << "[mint] episode " << sample.id << " aborted, parameters rolled back: " << reason << '\n';
    };

    try {
        LossPlan last_plan;
        for (std::size_t step = 0; step < config_.steps; ++step) {
            ad::Tape tape;
            LossEvaluation eval = evaluate_loss(tape, encoder_, views, queries, params_, config_);
            if (step == 0) {
                ep.pre_loss = eval.loss.value().item();
                ep.view_probabilities = eval.view_probabilities;
                ep.view_entropies = eval.view_entropies;
                ep.selected_views = eval.plan.selected_views;
                ep.selected_retrievals = eval.plan.retrievals;
            }
            GradientMap grads = tape.backward(eval.loss);
            if (observer_) observer_(grads, eval.plan, config_);
            if (!adapt_step(params_, optimizer_, grads, config_)) {
                roll_back("non-finite gradient or update");
                break;
            }
            last_plan = std::move(eval.plan);
        }
        if (!ep.aborted) {
            // Same kept views, retrieval redone against the updated keys.
            LossPlan recheck{last_plan.selected_views, {}};
            ep.post_loss = loss_value(encoder_, views, queries, params_, config_, recheck);
        } else {
            ep.post_loss = ep.pre_loss;
        }
    } catch (const NumericError& e) {
        roll_back(e.what());
        ep.post_loss = ep.pre_loss;
    }

    Tensor probabilities;
    ep.prediction = infer(encoder_, sample.input, params_, config_, &probabilities, &ep.final_retrieval);
    ep.correct = sample.label && *sample.label == ep.prediction;
    return ep;
}

std::vector<Episode> AdaptationEngine::run_stream(std::span<const StreamSample> samples) {
    std::vector<Episode> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(process(s));
    return out;
}

}  // namespace mint
