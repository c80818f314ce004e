// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// Memory Prompt Bank: N learnable (key, value) pairs. Keys are D_I-vectors used for
// cosine retrieval against hierarchical queries; values are L_m x D_I prompt blocks
// whose mean over all retrieved entries forms the Associative Prompt.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mint/autodiff.hpp"
#include "mint/tensor.hpp"
#include "mint/tensor_io.hpp"

namespace mint {

/// How retrievals from several layers are merged before averaging.
enum class UnionMode {
    Set,       ///< deduplicate by bank index
    Multiset,  ///< keep repeated selections (ablation only)
};

class MemoryPromptBank {
public:
    /// Every key and value entry drawn i.i.d. from N(0, 1); keys first, then values.
    static MemoryPromptBank init(std::size_t size, std::size_t prompt_length, std::size_t dim, std::uint64_t seed);
    static MemoryPromptBank from_named(const NamedTensors& tensors);

    std::size_t size() const { return keys_.size(); }
    std::size_t prompt_length() const { return prompt_length_; }
    std::size_t dim() const { return dim_; }

    const Parameter& key(std::size_t i) const { return keys_.at(i); }
    const Parameter& value(std::size_t i) const { return values_.at(i); }
    Parameter& key(std::size_t i) { return keys_.at(i); }
    Parameter& value(std::size_t i) { return values_.at(i); }

    /// Snapshot as "mpb.keys" {N, D} and "mpb.values" {N, L_m, D}.
    NamedTensors to_named() const;

    static std::string key_id(std::size_t i) { return "mpb.key." + std::to_string(i); }
    static std::string value_id(std::size_t i) { return "mpb.value." + std::to_string(i); }

private:
    MemoryPromptBank(std::size_t prompt_length, std::size_t dim) : prompt_length_(prompt_length), dim_(dim) {}

    std::size_t prompt_length_;
    std::size_t dim_;
    std::vector<Parameter> keys_;
    std::vector<Parameter> values_;
};

/// Top entries for one query, ordered by descending score (ties: lower index first).
struct LayerSelection {
    std::vector<std::size_t> indices;
    std::vector<Real> scores;
};

/// One LayerSelection per query layer.
struct RetrievalResult {
    std::vector<LayerSelection> layers;
};

/// The `count` keys most cosine-similar to `query`. Selection is not differentiable.
LayerSelection retrieve(const MemoryPromptBank& bank, const Tensor& query, std::size_t count);
RetrievalResult retrieve(const MemoryPromptBank& bank, const std::vector<Tensor>& queries, std::size_t count);

/// Bank indices that contribute to the composed prompt, ascending. Set mode deduplicates.
std::vector<std::size_t> contributing_indices(const RetrievalResult& retrieval, UnionMode mode);

struct AssociativePrompt {
    ad::Var prompt;  ///< {L_m, D_I}
    std::vector<std::size_t> contributors;
};

/// Mean of the contributing value blocks. Summation runs in ascending bank-index order, so
/// the result does not depend on the order in which layers were retrieved. With `trainable`
/// unset, the blocks enter the tape as constants.
AssociativePrompt compose(ad::Tape& tape, const MemoryPromptBank& bank, const RetrievalResult& retrieval,
                          UnionMode mode = UnionMode::Set, bool trainable = true);
Tensor compose_value(const MemoryPromptBank& bank, const RetrievalResult& retrieval, UnionMode mode = UnionMode::Set);

/// Sum over layers of the cosines between each query and its selected keys.
ad::Var similarity_reward(ad::Tape& tape, const std::vector<Tensor>& queries, const MemoryPromptBank& bank,
                          const RetrievalResult& retrieval, bool trainable = true);

}  // namespace mint
