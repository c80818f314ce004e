// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/memory_bank.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "mint/errors.hpp"

namespace mint {

MemoryPromptBank MemoryPromptBank::init(std::size_t size, std::size_t prompt_length, std::size_t dim,
                                        std::uint64_t seed) {
    if (size == 0 || prompt_length == 0 || dim == 0) {
        throw ConfigError("memory bank extents must be positive (size " + std::to_string(size) + ", prompt length " +
                          std::to_string(prompt_length) + ", dim " + std::to_string(dim) + ")");
    }
    std::mt19937_64 rng(seed);
    MemoryPromptBank bank(prompt_length, dim);
    bank.keys_.reserve(size);
    bank.values_.reserve(size);
    for (std::size_t i = 0; i < size; ++i) bank.keys_.push_back({key_id(i), Tensor::randn({dim}, rng), true});
    for (std::size_t i = 0; i < size; ++i) {
        bank.values_.push_back({value_id(i), Tensor::randn({prompt_length, dim}, rng), true});
    }
    return bank;
}

MemoryPromptBank MemoryPromptBank::from_named(const NamedTensors& tensors) {
    const Tensor& keys = find_tensor(tensors, "mpb.keys");
    const Tensor& values = find_tensor(tensors, "mpb.values");
    if (keys.rank() != 2 || values.rank() != 3 || values.dim(0) != keys.dim(0) || values.dim(2) != keys.dim(1)) {
        throw IoError("bank snapshot shapes disagree: keys " + shape_to_string(keys.shape()) + ", values " +
                      shape_to_string(values.shape()));
    }
    const std::size_t n = keys.dim(0), lm = values.dim(1), d = keys.dim(1);
    MemoryPromptBank bank(lm, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto k = keys.row(i);
        bank.keys_.push_back({key_id(i), Tensor({d}, std::vector<Real>(k.begin(), k.end())), true});
        auto first = values.data().begin() + static_cast<std::ptrdiff_t>(i * lm * d);
        bank.values_.push_back({value_id(i), Tensor({lm, d}, std::vector<Real>(first, first + lm * d)), true});
    }
    return bank;
}

NamedTensors MemoryPromptBank::to_named() const {
    const std::size_t n = size();
    std::vector<Real> keys, values;
    keys.reserve(n * dim_);
    values.reserve(n * prompt_length_ * dim_);
    for (std::size_t i = 0; i < n; ++i) {
        keys.insert(keys.end(), keys_[i].value.data().begin(), keys_[i].value.data().end());
        values.insert(values.end(), values_[i].value.data().begin(), values_[i].value.data().end());
    }
    NamedTensors out;
    out.emplace_back("mpb.keys", Tensor({n, dim_}, std::move(keys)));
    out.emplace_back("mpb.values", Tensor({n, prompt_length_, dim_}, std::move(values)));
    return out;
}

LayerSelection retrieve(const MemoryPromptBank& bank, const Tensor& query, std::size_t count) {
    if (count == 0 || count > bank.size()) {
        throw ConfigError("cannot select " + std::to_string(count) + " entries from a bank of " +
                          std::to_string(bank.size()));
    }
    if (query.rank() != 1 || query.numel() != bank.dim()) {
        throw ShapeError("query has shape " + shape_to_string(query.shape()) + ", bank keys have width " +
                         std::to_string(bank.dim()));
    }
    std::vector<Real> scores(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) scores[i] = kernels::cosine(bank.key(i).value.data(), query.data());
    std::vector<std::size_t> order(bank.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto before = [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(), before);
    LayerSelection out;
    out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    for (auto i : out.indices) out.scores.push_back(scores[i]);
    return out;
}

RetrievalResult retrieve(const MemoryPromptBank& bank, const std::vector<Tensor>& queries, std::size_t count) {
    RetrievalResult out;
    out.layers.reserve(queries.size());
    for (const auto& q : queries) out.layers.push_back(retrieve(bank, q, count));
    return out;
}

std::vector<std::size_t> contributing_indices(const RetrievalResult& retrieval, UnionMode mode) {
    std::vector<std::size_t> out;
    for (const auto& layer : retrieval.layers) out.insert(out.end(), layer.indices.begin(), layer.indices.end());
    std::sort(out.begin(), out.end());
    if (mode == UnionMode::Set) out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

ad::Var leaf(ad::Tape& tape, const Parameter& p, bool trainable) {
    return trainable ? tape.parameter(p) : tape.constant_ref(p.value);
}

}  // namespace

AssociativePrompt compose(ad::Tape& tape, const MemoryPromptBank& bank, const RetrievalResult& retrieval,
                          UnionMode mode, bool trainable) {
    auto contributors = contributing_indices(retrieval, mode);
    if (contributors.empty()) throw ContractViolation("compose: no layer selected any bank entry");
    std::vector<ad::Var> blocks;
    blocks.reserve(contributors.size());
    for (auto i : contributors) blocks.push_back(leaf(tape, bank.value(i), trainable));
    auto total = ad::add_n(blocks);
    AssociativePrompt out;
    out.prompt = ad::scale(total, 1.0 / static_cast<Real>(contributors.size()));
    out.contributors = std::move(contributors);
    return out;
}

Tensor compose_value(const MemoryPromptBank& bank, const RetrievalResult& retrieval, UnionMode mode) {
    ad::Tape tape;
    return compose(tape, bank, retrieval, mode, false).prompt.value();
}

ad::Var similarity_reward(ad::Tape& tape, const std::vector<Tensor>& queries, const MemoryPromptBank& bank,
                          const RetrievalResult& retrieval, bool trainable) {
    if (queries.size() != retrieval.layers.size() || queries.empty()) {
        throw ContractViolation("similarity_reward: " + std::to_string(queries.size()) + " queries for " +
                                std::to_string(retrieval.layers.size()) + " layer selections");
    }
    std::vector<ad::Var> per_layer;
    per_layer.reserve(queries.size());
    for (std::size_t l = 0; l < queries.size(); ++l) {
        std::vector<ad::Var> keys;
        for (auto i : retrieval.layers[l].indices) keys.push_back(leaf(tape, bank.key(i), trainable));
        auto selected = ad::concat_rows(keys);
        per_layer.push_back(ad::sum(ad::cosine_rows(selected, tape.constant(queries[l]))));
    }
    return ad::add_n(per_layer);
}

}  // namespace mint
