// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// Frozen toy dual encoder: a small pre-LN vision transformer over a patch grid and a
// small text transformer over embedding sequences, joined by a temperature-scaled
// cosine classifier. Weights are sampled once from a seed and never change.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mint/autodiff.hpp"
#include "mint/tensor.hpp"
#include "mint/tensor_io.hpp"

namespace mint {

struct EncoderConfig {
    std::size_t image_dim = 32;  ///< D_I, also the shared embedding width
    std::size_t text_dim = 32;   ///< D_T
    std::size_t image_depth = 6;
    std::size_t text_depth = 2;
    std::size_t heads = 2;
    std::size_t mlp_ratio = 2;
    std::size_t grid = 4;       ///< patch grid side; N_I = grid * grid + 1
    std::size_t patch_dim = 8;  ///< values per patch
    double temperature = 0.07;
    std::size_t num_classes = 10;
    std::size_t text_prompt_length = 4;  ///< L_t; the hand-crafted prompt has the same length
    std::size_t class_name_length = 2;
    std::size_t query_layers = 3;  ///< N_layers
    double text_embedding_scale = 0.2;   ///< std of class-name and hand-prompt token entries
    std::uint64_t weight_seed = 0;

    std::size_t image_tokens() const { return grid * grid + 1; }
    std::size_t patches() const { return grid * grid; }

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

/// Evenly spaced block indices over [0, depth), always containing the first and last block.
std::vector<std::size_t> designated_query_layers(std::size_t depth, std::size_t count);

struct TransformerBlockWeights {
    Tensor ln1_gain, ln1_bias;
    std::vector<Tensor> query, key, value, output;  ///< one projection per head
    Tensor ln2_gain, ln2_bias;
    Tensor fc1_weight, fc1_bias, fc2_weight, fc2_bias;
};

struct FrozenWeights {
    Tensor patch_projection;  ///< patch_dim x D_I
    Tensor class_token;       ///< D_I
    Tensor image_positions;   ///< N_I x D_I
    std::vector<TransformerBlockWeights> image_blocks;
    Tensor image_post_gain, image_post_bias;
    Tensor image_projection;  ///< D_I x D_I

    std::vector<Tensor> class_names;   ///< K sequences of class_name_length x D_T
    std::optional<Tensor> hand_prompt;  ///< L_t x D_T; absent when L_t == 0
    Tensor text_positions;              ///< (L_t + class_name_length) x D_T
    std::vector<TransformerBlockWeights> text_blocks;
    Tensor text_final_gain, text_final_bias;
    Tensor text_projection;  ///< D_T x D_I

    static FrozenWeights sample(const EncoderConfig& config);

    NamedTensors to_named() const;
    static FrozenWeights from_named(const EncoderConfig& config, const NamedTensors& tensors);

    bool bitwise_equal(const FrozenWeights& other) const;
};

/// Result of one image forward pass.
struct EncodedImage {
    Tensor feature;                   ///< v: projected readout embedding, width D_I
    std::vector<Tensor> queries;      ///< q^(l): token 0 of each designated layer's output
    std::vector<std::size_t> block_input_tokens;  ///< sequence length entering each block
    std::size_t readout_index = 0;    ///< position of the class token in the final sequence
    std::vector<Tensor> layer_outputs;  ///< every block's output, kept only on request
};

/// Same as EncodedImage, but the feature is a node on a tape.
struct TracedImage {
    ad::Var feature;
    std::vector<Tensor> queries;
    std::vector<std::size_t> block_input_tokens;
    std::size_t readout_index = 0;
    std::vector<Tensor> layer_outputs;
};

struct ImageEncodeOptions {
    /// Index of the block whose input receives the prompt tokens.
    std::size_t injection_layer = 0;
    bool keep_layer_outputs = false;
};

class DualEncoder {
public:
    explicit DualEncoder(const EncoderConfig& config);
    DualEncoder(const EncoderConfig& config, FrozenWeights weights);

    const EncoderConfig& config() const { return config_; }
    const FrozenWeights& weights() const { return weights_; }
    const std::vector<std::size_t>& query_layer_indices() const { return query_layers_; }

    /// Encodes a view ({patches, patch_dim}). `injected`, when given, is {L_m, D_I} and is
    /// prepended to the input of block `options.injection_layer`.
    EncodedImage encode_image(const Tensor& view, const Tensor* injected = nullptr,
                              const ImageEncodeOptions& options = {}) const;
    TracedImage encode_image(ad::Tape& tape, const Tensor& view, const ad::Var* injected,
                             const ImageEncodeOptions& options = {}) const;
    /// Differentiable in the view itself.
    TracedImage encode_image(ad::Tape& tape, const ad::Var& view, const ad::Var* injected,
                             const ImageEncodeOptions& options = {}) const;

    /// Text feature t_k for [prompt ; class name k], width D_I. A null prompt is the empty prefix.
    ad::Var encode_text(ad::Tape& tape, const ad::Var* prompt, std::size_t class_index) const;
    Tensor encode_text(const Tensor* prompt, std::size_t class_index) const;

    /// All K text features stacked as {K, D_I}.
    ad::Var text_features(ad::Tape& tape, const ad::Var* prompt) const;

    /// Text features built from the hand-crafted prompt, computed once at construction.
    const Tensor& zero_shot_text_features() const { return zero_shot_text_; }

    Tensor zero_shot_predict(const Tensor& view) const;

private:
    void check_view(const Tensor& view) const;

    EncoderConfig config_;
    FrozenWeights weights_;
    std::vector<std::size_t> query_layers_;
    Tensor zero_shot_text_;
};

/// P(y = k) = softmax_k(cos(v, t_k) / temperature). `text` is {K, D}.
ad::Var predict(const ad::Var& feature, const ad::Var& text, double temperature);
Tensor predict(const Tensor& feature, const Tensor& text, double temperature);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(const Tensor& probabilities);

}  // namespace mint
