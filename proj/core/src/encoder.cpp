// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/encoder.hpp"

#include <cmath>
#include <string>

#include "mint/errors.hpp"

namespace mint {

void EncoderConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("encoder config: " + what);
    };
    require(image_dim > 0 && text_dim > 0, "token widths must be positive");
    require(heads > 0 && image_dim % heads == 0, "image_dim must be divisible by heads");
    require(text_dim % heads == 0, "text_dim must be divisible by heads");
    require(image_depth > 0 && text_depth > 0, "depths must be positive");
    require(mlp_ratio > 0, "mlp_ratio must be positive");
    require(grid > 0 && image_tokens() >= 2, "image sequence needs at least two tokens");
    require(patch_dim > 0, "patch_dim must be positive");
    require(std::isfinite(temperature) && temperature > 0.0, "temperature must be positive");
    require(num_classes >= 2, "need at least two classes");
    require(class_name_length > 0, "class names need at least one token");
    require(std::isfinite(text_embedding_scale) && text_embedding_scale > 0.0, "text_embedding_scale must be positive");
    require(query_layers >= 1 && query_layers <= image_depth, "query_layers must be in [1, image_depth]");
}

std::vector<std::size_t> designated_query_layers(std::size_t depth, std::size_t count) {
    if (count == 0 || count > depth) {
        throw ConfigError("cannot designate " + std::to_string(count) + " query layers in depth " +
                          std::to_string(depth));
    }
    if (count == 1) return {depth - 1};
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double pos = static_cast<double>(i) * static_cast<double>(depth - 1) / static_cast<double>(count - 1);
        const auto layer = static_cast<std::size_t>(std::lround(pos));
        if (out.empty() || out.back() != layer) out.push_back(layer);
    }
    return out;
}

namespace {

TransformerBlockWeights sample_block(std::size_t width, std::size_t heads, std::size_t mlp_ratio,
                                     std::mt19937_64& rng) {
    const std::size_t head_dim = width / heads;
    const std::size_t hidden = width * mlp_ratio;
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(width));
    TransformerBlockWeights b;
    b.ln1_gain = Tensor({width}, 1.0);
    b.ln1_bias = Tensor({width}, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
        b.query.push_back(Tensor::randn({width, head_dim}, rng, in_scale));
        b.key.push_back(Tensor::randn({width, head_dim}, rng, in_scale));
        b.value.push_back(Tensor::randn({width, head_dim}, rng, in_scale));
        b.output.push_back(Tensor::randn({head_dim, width}, rng, in_scale));
    }
    b.ln2_gain = Tensor({width}, 1.0);
    b.ln2_bias = Tensor({width}, 0.0);
    b.fc1_weight = Tensor::randn({width, hidden}, rng, in_scale);
    b.fc1_bias = Tensor({hidden}, 0.0);
    b.fc2_weight = Tensor::randn({hidden, width}, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
    b.fc2_bias = Tensor({width}, 0.0);
    return b;
}

void name_block(NamedTensors& out, const std::string& prefix, const TransformerBlockWeights& b) {
    out.emplace_back(prefix + ".ln1.gain", b.ln1_gain);
    out.emplace_back(prefix + ".ln1.bias", b.ln1_bias);
    for (std::size_t h = 0; h < b.query.size(); ++h) {
        const std::string head = prefix + ".attn.head" + std::to_string(h);
        out.emplace_back(head + ".query", b.query[h]);
        out.emplace_back(head + ".key", b.key[h]);
        out.emplace_back(head + ".value", b.value[h]);
        out.emplace_back(head + ".output", b.output[h]);
    }
    out.emplace_back(prefix + ".ln2.gain", b.ln2_gain);
    out.emplace_back(prefix + ".ln2.bias", b.ln2_bias);
    out.emplace_back(prefix + ".fc1.weight", b.fc1_weight);
    out.emplace_back(prefix + ".fc1.bias", b.fc1_bias);
    out.emplace_back(prefix + ".fc2.weight", b.fc2_weight);
    out.emplace_back(prefix + ".fc2.bias", b.fc2_bias);
}

Tensor checked(const NamedTensors& tensors, const std::string& name, const Shape& shape) {
    const Tensor& t = find_tensor(tensors, name);
    if (t.shape() != shape) {
        throw IoError("tensor '" + name + "' has shape " + shape_to_string(t.shape()) + ", expected " +
                      shape_to_string(shape));
    }
    return t;
}

TransformerBlockWeights load_block(const NamedTensors& tensors, const std::string& prefix, std::size_t width,
                                   std::size_t heads, std::size_t mlp_ratio) {
    const std::size_t head_dim = width / heads;
    const std::size_t hidden = width * mlp_ratio;
    TransformerBlockWeights b;
    b.ln1_gain = checked(tensors, prefix + ".ln1.gain", {width});
    b.ln1_bias = checked(tensors, prefix + ".ln1.bias", {width});
    for (std::size_t h = 0; h < heads; ++h) {
        const std::string head = prefix + ".attn.head" + std::to_string(h);
        b.query.push_back(checked(tensors, head + ".query", {width, head_dim}));
        b.key.push_back(checked(tensors, head + ".key", {width, head_dim}));
        b.value.push_back(checked(tensors, head + ".value", {width, head_dim}));
        b.output.push_back(checked(tensors, head + ".output", {head_dim, width}));
    }
    b.ln2_gain = checked(tensors, prefix + ".ln2.gain", {width});
    b.ln2_bias = checked(tensors, prefix + ".ln2.bias", {width});
    b.fc1_weight = checked(tensors, prefix + ".fc1.weight", {width, hidden});
    b.fc1_bias = checked(tensors, prefix + ".fc1.bias", {hidden});
    b.fc2_weight = checked(tensors, prefix + ".fc2.weight", {hidden, width});
    b.fc2_bias = checked(tensors, prefix + ".fc2.bias", {width});
    return b;
}

ad::Var attention(ad::Tape& tape, const ad::Var& x, const TransformerBlockWeights& b) {
    const std::size_t head_dim = b.query.front().dim(1);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    std::vector<ad::Var> heads;
    heads.reserve(b.query.size());
    for (std::size_t h = 0; h < b.query.size(); ++h) {
        auto q = ad::matmul(x, tape.constant_ref(b.query[h]));
        auto k = ad::matmul(x, tape.constant_ref(b.key[h]));
        auto v = ad::matmul(x, tape.constant_ref(b.value[h]));
        auto scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt);
        auto mixed = ad::matmul(ad::softmax(scores, 1), v);
        heads.push_back(ad::matmul(mixed, tape.constant_ref(b.output[h])));
    }
    return ad::add_n(heads);
}

ad::Var transformer_block(ad::Tape& tape, const ad::Var& x, const TransformerBlockWeights& b) {
    auto h = ad::layer_norm(x, tape.constant_ref(b.ln1_gain), tape.constant_ref(b.ln1_bias));
    auto x1 = ad::add(x, attention(tape, h, b));
    auto h2 = ad::layer_norm(x1, tape.constant_ref(b.ln2_gain), tape.constant_ref(b.ln2_bias));
    auto up = ad::gelu(ad::add_row(ad::matmul(h2, tape.constant_ref(b.fc1_weight)), tape.constant_ref(b.fc1_bias)));
    auto down = ad::add_row(ad::matmul(up, tape.constant_ref(b.fc2_weight)), tape.constant_ref(b.fc2_bias));
    return ad::add(x1, down);
}

ad::Var project(ad::Tape& tape, const ad::Var& token, const Tensor& gain, const Tensor& bias,
                const Tensor& projection) {
    auto normed = ad::layer_norm(token, tape.constant_ref(gain), tape.constant_ref(bias));
    const std::size_t width = normed.value().numel();
    auto row = ad::reshape(normed, {1, width});
    auto out = ad::matmul(row, tape.constant_ref(projection));
    return ad::reshape(out, {projection.dim(1)});
}

}  // namespace

FrozenWeights FrozenWeights::sample(const EncoderConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.weight_seed);
    const std::size_t di = config.image_dim, dt = config.text_dim;
    FrozenWeights w;
    w.patch_projection = Tensor::randn({config.patch_dim, di}, rng, 1.0 / std::sqrt(static_cast<double>(config.patch_dim)));
    w.class_token = Tensor::randn({di}, rng, 1.0);
    w.image_positions = Tensor::randn({config.image_tokens(), di}, rng, 0.1);
    for (std::size_t l = 0; l < config.image_depth; ++l) {
        w.image_blocks.push_back(sample_block(di, config.heads, config.mlp_ratio, rng));
    }
    w.image_post_gain = Tensor({di}, 1.0);
    w.image_post_bias = Tensor({di}, 0.0);
    w.image_projection = Tensor::randn({di, di}, rng, 1.0 / std::sqrt(static_cast<double>(di)));

    for (std::size_t k = 0; k < config.num_classes; ++k) {
        w.class_names.push_back(Tensor::randn({config.class_name_length, dt}, rng, config.text_embedding_scale));
    }
    if (config.text_prompt_length > 0) {
        w.hand_prompt = Tensor::randn({config.text_prompt_length, dt}, rng, config.text_embedding_scale);
    }
    w.text_positions = Tensor::randn({config.text_prompt_length + config.class_name_length, dt}, rng, 0.1 * config.text_embedding_scale);
    for (std::size_t l = 0; l < config.text_depth; ++l) {
        w.text_blocks.push_back(sample_block(dt, config.heads, config.mlp_ratio, rng));
    }
    w.text_final_gain = Tensor({dt}, 1.0);
    w.text_final_bias = Tensor({dt}, 0.0);
    w.text_projection = Tensor::randn({dt, di}, rng, 1.0 / std::sqrt(static_cast<double>(dt)));
    return w;
}

NamedTensors FrozenWeights::to_named() const {
    NamedTensors out;
    out.emplace_back("image.patch_projection", patch_projection);
    out.emplace_back("image.class_token", class_token);
    out.emplace_back("image.positions", image_positions);
    for (std::size_t l = 0; l < image_blocks.size(); ++l) {
        name_block(out, "image.block" + std::to_string(l), image_blocks[l]);
    }
    out.emplace_back("image.post.gain", image_post_gain);
    out.emplace_back("image.post.bias", image_post_bias);
    out.emplace_back("image.projection", image_projection);
    for (std::size_t k = 0; k < class_names.size(); ++k) {
        out.emplace_back("text.class_name" + std::to_string(k), class_names[k]);
    }
    if (hand_prompt) out.emplace_back("text.hand_prompt", *hand_prompt);
    out.emplace_back("text.positions", text_positions);
    for (std::size_t l = 0; l < text_blocks.size(); ++l) {
        name_block(out, "text.block" + std::to_string(l), text_blocks[l]);
    }
    out.emplace_back("text.final.gain", text_final_gain);
    out.emplace_back("text.final.bias", text_final_bias);
    out.emplace_back("text.projection", text_projection);
    return out;
}

FrozenWeights FrozenWeights::from_named(const EncoderConfig& config, const NamedTensors& tensors) {
    config.validate();
    const std::size_t di = config.image_dim, dt = config.text_dim;
    FrozenWeights w;
    w.patch_projection = checked(tensors, "image.patch_projection", {config.patch_dim, di});
    w.class_token = checked(tensors, "image.class_token", {di});
    w.image_positions = checked(tensors, "image.positions", {config.image_tokens(), di});
    for (std::size_t l = 0; l < config.image_depth; ++l) {
        w.image_blocks.push_back(
            load_block(tensors, "image.block" + std::to_string(l), di, config.heads, config.mlp_ratio));
    }
    w.image_post_gain = checked(tensors, "image.post.gain", {di});
    w.image_post_bias = checked(tensors, "image.post.bias", {di});
    w.image_projection = checked(tensors, "image.projection", {di, di});
    for (std::size_t k = 0; k < config.num_classes; ++k) {
        w.class_names.push_back(checked(tensors, "text.class_name" + std::to_string(k), {config.class_name_length, dt}));
    }
    if (config.text_prompt_length > 0) {
        w.hand_prompt = checked(tensors, "text.hand_prompt", {config.text_prompt_length, dt});
    }
    w.text_positions = checked(tensors, "text.positions", {config.text_prompt_length + config.class_name_length, dt});
    for (std::size_t l = 0; l < config.text_depth; ++l) {
        w.text_blocks.push_back(
            load_block(tensors, "text.block" + std::to_string(l), dt, config.heads, config.mlp_ratio));
    }
    w.text_final_gain = checked(tensors, "text.final.gain", {dt});
    w.text_final_bias = checked(tensors, "text.final.bias", {dt});
    w.text_projection = checked(tensors, "text.projection", {dt, di});
    return w;
}

bool FrozenWeights::bitwise_equal(const FrozenWeights& other) const {
    const auto mine = to_named();
    const auto theirs = other.to_named();
    if (mine.size() != theirs.size()) return false;
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (mine[i].first != theirs[i].first || !mine[i].second.bitwise_equal(theirs[i].second)) return false;
    }
    return true;
}

DualEncoder::DualEncoder(const EncoderConfig& config) : DualEncoder(config, FrozenWeights::sample(config)) {}

DualEncoder::DualEncoder(const EncoderConfig& config, FrozenWeights weights)
    : config_(config), weights_(std::move(weights)) {
    config_.validate();
    query_layers_ = designated_query_layers(config_.image_depth, config_.query_layers);
    Tensor stacked({config_.num_classes, config_.image_dim});
    for (std::size_t k = 0; k < config_.num_classes; ++k) {
        const Tensor t = encode_text(weights_.hand_prompt ? &*weights_.hand_prompt : nullptr, k);
        std::copy(t.data().begin(), t.data().end(), stacked.row(k).begin());
    }
    zero_shot_text_ = std::move(stacked);
}

void DualEncoder::check_view(const Tensor& view) const {
    if (view.rank() != 2 || view.dim(0) != config_.patches() || view.dim(1) != config_.patch_dim) {
        throw ShapeError("view has shape " + shape_to_string(view.shape()) + ", expected " +
                         shape_to_string({config_.patches(), config_.patch_dim}));
    }
}

TracedImage DualEncoder::encode_image(ad::Tape& tape, const Tensor& view, const ad::Var* injected,
                                      const ImageEncodeOptions& options) const {
    check_view(view);
    return encode_image(tape, tape.constant(view), injected, options);
}

TracedImage DualEncoder::encode_image(ad::Tape& tape, const ad::Var& view, const ad::Var* injected,
                                      const ImageEncodeOptions& options) const {
    check_view(view.value());
    if (injected) {
        const Tensor& p = injected->value();
        if (p.rank() != 2 || p.dim(1) != config_.image_dim) {
            throw ShapeError("injected prompt has shape " + shape_to_string(p.shape()) + ", expected width " +
                             std::to_string(config_.image_dim));
        }
        if (options.injection_layer >= config_.image_depth) {
            throw ConfigError("injection layer " + std::to_string(options.injection_layer) + " beyond depth " +
                              std::to_string(config_.image_depth));
        }
    }
    auto patches = ad::matmul(view, tape.constant_ref(weights_.patch_projection));
    const ad::Var parts[] = {tape.constant_ref(weights_.class_token), patches};
    auto x = ad::add(ad::concat_rows(parts), tape.constant_ref(weights_.image_positions));

    TracedImage out;
    std::size_t query_slot = 0;
    for (std::size_t l = 0; l < config_.image_depth; ++l) {
        if (injected && l == options.injection_layer) {
            const ad::Var seq[] = {*injected, x};
            x = ad::concat_rows(seq);
            out.readout_index += injected->value().dim(0);
        }
        out.block_input_tokens.push_back(x.value().dim(0));
        x = transformer_block(tape, x, weights_.image_blocks[l]);
        if (options.keep_layer_outputs) out.layer_outputs.push_back(x.value());
        if (query_slot < query_layers_.size() && query_layers_[query_slot] == l) {
            auto first = x.value().row(0);
            out.queries.emplace_back(Shape{first.size()}, std::vector<Real>(first.begin(), first.end()));
            ++query_slot;
        }
    }
    auto readout = ad::take_row(x, out.readout_index);
    out.feature = project(tape, readout, weights_.image_post_gain, weights_.image_post_bias, weights_.image_projection);
    return out;
}

EncodedImage DualEncoder::encode_image(const Tensor& view, const Tensor* injected,
                                       const ImageEncodeOptions& options) const {
    ad::Tape tape;
    ad::Var prompt;
    if (injected) prompt = tape.constant_ref(*injected);
    TracedImage traced = encode_image(tape, view, injected ? &prompt : nullptr, options);
    EncodedImage out;
    out.feature = traced.feature.value();
    out.queries = std::move(traced.queries);
    out.block_input_tokens = std::move(traced.block_input_tokens);
    out.readout_index = traced.readout_index;
    out.layer_outputs = std::move(traced.layer_outputs);
    return out;
}

ad::Var DualEncoder::encode_text(ad::Tape& tape, const ad::Var* prompt, std::size_t class_index) const {
    if (class_index >= config_.num_classes) {
        throw ContractViolation("class index " + std::to_string(class_index) + " out of range for " +
                                std::to_string(config_.num_classes) + " classes");
    }
    std::vector<ad::Var> parts;
    if (prompt) {
        const Tensor& p = prompt->value();
        if (p.rank() != 2 || p.dim(0) != config_.text_prompt_length || p.dim(1) != config_.text_dim) {
            throw ShapeError("text prompt has shape " + shape_to_string(p.shape()) + ", expected " +
                             shape_to_string({config_.text_prompt_length, config_.text_dim}));
        }
        parts.push_back(*prompt);
    }
    parts.push_back(tape.constant_ref(weights_.class_names[class_index]));
    auto seq = ad::concat_rows(parts);
    const std::size_t len = seq.value().dim(0);
    // Positions are assigned so that the class-name tokens keep their slots when the prefix is empty.
    const std::size_t offset = weights_.text_positions.dim(0) - len;
    std::vector<std::size_t> rows(len);
    for (std::size_t i = 0; i < len; ++i) rows[i] = offset + i;
    auto x = ad::add(seq, ad::gather_rows(tape.constant_ref(weights_.text_positions), rows));
    for (const auto& block : weights_.text_blocks) x = transformer_block(tape, x, block);
    auto last = ad::take_row(x, len - 1);
    return project(tape, last, weights_.text_final_gain, weights_.text_final_bias, weights_.text_projection);
}

Tensor DualEncoder::encode_text(const Tensor* prompt, std::size_t class_index) const {
    ad::Tape tape;
    ad::Var p;
    if (prompt) p = tape.constant_ref(*prompt);
    return encode_text(tape, prompt ? &p : nullptr, class_index).value();
}

ad::Var DualEncoder::text_features(ad::Tape& tape, const ad::Var* prompt) const {
    std::vector<ad::Var> rows;
    rows.reserve(config_.num_classes);
    for (std::size_t k = 0; k < config_.num_classes; ++k) rows.push_back(encode_text(tape, prompt, k));
    return ad::concat_rows(rows);
}

Tensor DualEncoder::zero_shot_predict(const Tensor& view) const {
    return predict(encode_image(view).feature, zero_shot_text_, config_.temperature);
}

ad::Var predict(const ad::Var& feature, const ad::Var& text, double temperature) {
    if (!(temperature > 0.0)) throw ContractViolation("predict: temperature must be positive");
    return ad::softmax(ad::scale(ad::cosine_rows(text, feature), 1.0 / temperature), 0);
}

Tensor predict(const Tensor& feature, const Tensor& text, double temperature) {
    ad::Tape tape;
    return predict(tape.constant_ref(feature), tape.constant_ref(text), temperature).value();
}

std::size_t argmax(const Tensor& probabilities) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probabilities.numel(); ++i) {
        if (probabilities[i] > probabilities[best]) best = i;
    }
    return best;
}

}  // namespace mint
