// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic mixed-domain benchmark. Class prototypes live in the frozen encoder's input
// space and are built from its own zero-shot text features, so the clean domain is easy;
// shifted domains push samples through chains of corruption operators.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mint/adaptation.hpp"
#include "mint/encoder.hpp"
#include "mint/tensor.hpp"

namespace mint {

enum class ShiftKind {
    GaussianNoise,  ///< x + sigma * N(0, 1)
    ChannelStyle,   ///< x * A, A a near-orthogonal channel mix with gains
    PatchDropout,   ///< each patch zeroed with probability `value`
    ContrastScale,  ///< per-channel mean + gamma * (x - mean)
};

std::string to_string(ShiftKind kind);
ShiftKind parse_shift_kind(const std::string& name);

struct ShiftOperator {
    ShiftKind kind = ShiftKind::GaussianNoise;
    double value = 0.0;  ///< sigma, mixing strength, drop rate or gamma

    void validate() const;
};

struct DomainSpec {
    std::string name;
    std::vector<ShiftOperator> shifts;  ///< applied in order; empty means clean
};

enum class StreamOrder {
    Interleaved,  ///< seeded shuffle across all domains
    Sequential,   ///< one domain after another
};

std::string to_string(StreamOrder order);
StreamOrder parse_stream_order(const std::string& name);

struct DatasetSpec {
    std::size_t samples_per_class = 10;  ///< per domain
    std::vector<DomainSpec> domains{{"clean", {}}};
    double sample_noise = 0.5;           ///< per-sample perturbation around a prototype
    double min_clean_accuracy = 0.8;     ///< exclusive lower bound for zero-shot on clean samples
    std::size_t refine_steps = 100;      ///< prototype refinement through the frozen encoder
    StreamOrder order = StreamOrder::Interleaved;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Shift operators bound to one domain; stochastic operators draw from the caller's rng.
class DomainShift {
public:
    DomainShift(const DomainSpec& domain, std::size_t channels, std::uint64_t seed);

    Tensor apply(const Tensor& x, std::mt19937_64& rng) const;
    const std::string& name() const { return name_; }

private:
    std::string name_;
    std::vector<ShiftOperator> shifts_;
    std::vector<Tensor> mixes_;  ///< one {C, C} matrix per operator, used by ChannelStyle only
};

/// Orthonormalised (I + strength * G / sqrt(C)) scaled by per-channel gains in
/// [exp(-strength / 4), exp(strength / 4)]; strength 0 gives the identity exactly.
Tensor channel_style_matrix(std::size_t channels, double strength, std::mt19937_64& rng);

struct Dataset {
    std::vector<StreamSample> samples;  ///< stream order; sample ids equal positions
    std::vector<std::string> domains;   ///< spec order
    std::vector<Tensor> prototypes;     ///< one per class
    double clean_accuracy = 0.0;        ///< zero-shot accuracy on the unshifted samples
    std::size_t attempts = 0;           ///< generation attempts used, 1-based
};

/// Throws GenerationError when the clean accuracy target is missed on ten consecutive seeds.
Dataset generate_dataset(const DualEncoder& encoder, const DatasetSpec& spec);

/// Zero-shot top-1 accuracy over labelled samples.
double zero_shot_accuracy(const DualEncoder& encoder, const std::vector<StreamSample>& samples);

}  // namespace mint
