// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "mint/errors.hpp"
#include "mint/random.hpp"

namespace mint {

std::string to_string(ShiftKind kind) {
    switch (kind) {
        case ShiftKind::GaussianNoise: return "gaussian-noise";
        case ShiftKind::ChannelStyle: return "channel-style";
        case ShiftKind::PatchDropout: return "patch-dropout";
        case ShiftKind::ContrastScale: return "contrast-scale";
    }
    return "unknown";
}

ShiftKind parse_shift_kind(const std::string& name) {
    if (name == "gaussian-noise") return ShiftKind::GaussianNoise;
    if (name == "channel-style") return ShiftKind::ChannelStyle;
    if (name == "patch-dropout") return ShiftKind::PatchDropout;
    if (name == "contrast-scale") return ShiftKind::ContrastScale;
    throw ConfigError("unknown shift operator '" + name + "'");
}

std::string to_string(StreamOrder order) {
    return order == StreamOrder::Interleaved ? "interleaved" : "sequential";
}

StreamOrder parse_stream_order(const std::string& name) {
    if (name == "interleaved") return StreamOrder::Interleaved;
    if (name == "sequential") return StreamOrder::Sequential;
    throw ConfigError("unknown stream order '" + name + "'");
}

void ShiftOperator::validate() const {
    if (!std::isfinite(value)) throw ConfigError(to_string(kind) + ": parameter must be finite");
    switch (kind) {
        case ShiftKind::GaussianNoise:
        case ShiftKind::ChannelStyle:
            if (value < 0.0) throw ConfigError(to_string(kind) + ": parameter must be >= 0");
            break;
        case ShiftKind::PatchDropout:
            if (value < 0.0 || value >= 1.0) throw ConfigError("patch-dropout: rate must lie in [0, 1)");
            break;
        case ShiftKind::ContrastScale:
            if (value <= 0.0) throw ConfigError("contrast-scale: gamma must be > 0");
            break;
    }
}

void DatasetSpec::validate() const {
    if (samples_per_class == 0) throw ConfigError("samples_per_class must be at least 1");
    if (domains.empty()) throw ConfigError("dataset needs at least one domain");
    for (std::size_t i = 0; i < domains.size(); ++i) {
        if (domains[i].name.empty()) throw ConfigError("domain " + std::to_string(i) + " has no name");
        for (std::size_t j = 0; j < i; ++j) {
            if (domains[j].name == domains[i].name) throw ConfigError("duplicate domain '" + domains[i].name + "'");
        }
        for (const auto& s : domains[i].shifts) s.validate();
    }
    if (!(sample_noise >= 0.0) || !std::isfinite(sample_noise)) throw ConfigError("sample_noise must be >= 0");
    if (!(min_clean_accuracy >= 0.0 && min_clean_accuracy < 1.0)) {
        throw ConfigError("min_clean_accuracy must lie in [0, 1)");
    }
}

Tensor channel_style_matrix(std::size_t channels, double strength, std::mt19937_64& rng) {
    std::normal_distribution<Real> normal(0.0, 1.0);
    const Real scale = strength / std::sqrt(static_cast<Real>(channels));
    Tensor a({channels, channels});
    for (std::size_t r = 0; r < channels; ++r) {
        for (std::size_t c = 0; c < channels; ++c) a.at(r, c) = (r == c ? 1.0 : 0.0) + scale * normal(rng);
    }
    // Modified Gram-Schmidt over rows.
    for (std::size_t r = 0; r < channels; ++r) {
        auto row = a.row(r);
        for (std::size_t p = 0; p < r; ++p) {
            auto prev = a.row(p);
            Real d = 0.0;
            for (std::size_t c = 0; c < channels; ++c) d += row[c] * prev[c];
            for (std::size_t c = 0; c < channels; ++c) row[c] -= d * prev[c];
        }
        Real n = 0.0;
        for (auto v : row) n += v * v;
        n = std::sqrt(n);
        if (n < 1e-8) throw GenerationError("channel-style: degenerate mixing draw");
        for (auto& v : row) v /= n;
    }
    std::uniform_real_distribution<Real> gain(-0.25, 0.25);
    for (std::size_t c = 0; c < channels; ++c) {
        const Real g = std::exp(strength * gain(rng));
        for (std::size_t r = 0; r < channels; ++r) a.at(r, c) *= g;
    }
    return a;
}

DomainShift::DomainShift(const DomainSpec& domain, std::size_t channels, std::uint64_t seed)
    : name_(domain.name), shifts_(domain.shifts) {
    mixes_.reserve(shifts_.size());
    for (std::size_t i = 0; i < shifts_.size(); ++i) {
        shifts_[i].validate();
        if (shifts_[i].kind == ShiftKind::ChannelStyle) {
            std::mt19937_64 rng(derive_seed(seed, i));
            mixes_.push_back(channel_style_matrix(channels, shifts_[i].value, rng));
        } else {
            mixes_.emplace_back();
        }
    }
}

Tensor DomainShift::apply(const Tensor& x, std::mt19937_64& rng) const {
    Tensor y = x;
    const std::size_t rows = y.dim(0), cols = y.dim(1);
    for (std::size_t i = 0; i < shifts_.size(); ++i) {
        const ShiftOperator& s = shifts_[i];
        switch (s.kind) {
            case ShiftKind::GaussianNoise: {
                std::normal_distribution<Real> normal(0.0, 1.0);
                for (auto& v : y.data()) v += s.value * normal(rng);
                break;
            }
            case ShiftKind::ChannelStyle:
                y = kernels::matmul(y, mixes_[i]);
                break;
            case ShiftKind::PatchDropout: {
                std::bernoulli_distribution drop(s.value);
                for (std::size_t r = 0; r < rows; ++r) {
                    if (drop(rng)) std::fill(y.row(r).begin(), y.row(r).end(), 0.0);
                }
                break;
            }
            case ShiftKind::ContrastScale:
                for (std::size_t c = 0; c < cols; ++c) {
                    Real mean = 0.0;
                    for (std::size_t r = 0; r < rows; ++r) mean += y.at(r, c);
                    mean /= static_cast<Real>(rows);
                    for (std::size_t r = 0; r < rows; ++r) y.at(r, c) = mean + s.value * (y.at(r, c) - mean);
                }
                break;
        }
    }
    return y;
}

double zero_shot_accuracy(const DualEncoder& encoder, const std::vector<StreamSample>& samples) {
    std::size_t labelled = 0, correct = 0;
    for (const auto& s : samples) {
        if (!s.label) continue;
        ++labelled;
        if (argmax(encoder.zero_shot_predict(s.input)) == *s.label) ++correct;
    }
    return labelled == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(labelled);
}

namespace {

void rescale_to_unit_rms(Tensor& x) {
    Real ss = 0.0;
    for (auto v : x.data()) ss += v * v;
    const Real rms = std::sqrt(ss / static_cast<Real>(x.numel()));
    if (rms > 0.0) {
        for (auto& v : x.data()) v /= rms;
    }
}

/// Random tokens prepended during refinement, standing in for prompts injected later.
constexpr std::size_t kPerturbationTokens = 2;

/// Pushes a prototype towards its class by normalised ascent on
/// cos(v, t_k) - mean_j cos(v, t_j) + P(k | x), summed over a noisy copy, a random crop of it and
/// the noisy copy with random tokens prepended, so all three stay inside the class region.
void refine_prototype(const DualEncoder& encoder, Tensor& x, std::size_t label, std::size_t steps, double noise,
                      std::mt19937_64& rng) {
    const EncoderConfig& ec = encoder.config();
    const std::size_t k = ec.num_classes;
    Tensor weights({k}, -1.0 / static_cast<Real>(k));
    weights[label] += 1.0;
    Tensor one_hot({k}, 0.0);
    one_hot[label] = 1.0;
    const Real step = 0.05 * std::sqrt(static_cast<Real>(x.numel()));
    std::normal_distribution<Real> normal(0.0, noise);
    for (std::size_t it = 0; it < steps; ++it) {
        ad::Tape tape;
        Parameter leaf{"input", x, true};
        auto clean = tape.parameter(leaf);
        Tensor jitter(x.shape());
        for (auto& v : jitter.data()) v = normal(rng);
        auto noisy = ad::add(clean, tape.constant(std::move(jitter)));
        const auto rows = random_crop_rows(ec.grid, rng);
        auto extra = tape.constant(Tensor::randn({kPerturbationTokens, ec.image_dim}, rng));
        const ad::Var views[] = {noisy, ad::gather_rows(noisy, rows), noisy};
        const ad::Var* injected[] = {nullptr, nullptr, &extra};
        std::vector<ad::Var> terms;
        const ad::Var text = tape.constant_ref(encoder.zero_shot_text_features());
        for (std::size_t v = 0; v < 3; ++v) {
            auto feature = encoder.encode_image(tape, views[v], injected[v]).feature;
            auto margin = ad::sum(ad::mul(ad::cosine_rows(text, feature), tape.constant_ref(weights)));
            auto target = ad::sum(ad::mul(predict(feature, text, ec.temperature), tape.constant_ref(one_hot)));
            terms.push_back(ad::add(margin, target));
        }
        // Minimise the negated objective.
        GradientMap grads = tape.backward(ad::scale(ad::add_n(terms), -1.0));
        const Tensor& g = grads.at("input");
        Real norm = 0.0;
        for (auto v : g.data()) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-12) break;
        for (std::size_t i = 0; i < x.numel(); ++i) x[i] -= step * g[i] / norm;
        rescale_to_unit_rms(x);
    }
}

Dataset attempt(const DualEncoder& encoder, const DatasetSpec& spec, std::uint64_t seed) {
    const EncoderConfig& ec = encoder.config();
    const std::size_t k = ec.num_classes;
    const std::size_t features = ec.image_dim;
    std::mt19937_64 proto_rng(derive_seed(seed, 0));

    Dataset data;
    auto mapping = Tensor::randn({ec.patches() * ec.patch_dim, features}, proto_rng);
    const Tensor& text = encoder.zero_shot_text_features();
    for (std::size_t c = 0; c < k; ++c) {
        auto t = text.row(c);
        Real n = 0.0;
        for (auto v : t) n += v * v;
        n = std::sqrt(n) + 1e-12;
        Tensor proto({ec.patches(), ec.patch_dim});
        for (std::size_t i = 0; i < proto.numel(); ++i) {
            Real acc = 0.0;
            for (std::size_t j = 0; j < features; ++j) acc += mapping.at(i, j) * t[j];
            proto[i] = acc / n;
        }
        rescale_to_unit_rms(proto);
        refine_prototype(encoder, proto, c, spec.refine_steps, spec.sample_noise, proto_rng);
        data.prototypes.push_back(std::move(proto));
    }

    std::vector<std::vector<StreamSample>> per_domain(spec.domains.size());
    std::vector<StreamSample> clean;
    std::normal_distribution<Real> normal(0.0, 1.0);
    for (std::size_t d = 0; d < spec.domains.size(); ++d) {
        const std::uint64_t domain_seed = derive_seed(seed, 100 + d);
        const DomainShift shift(spec.domains[d], ec.patch_dim, derive_seed(domain_seed, 0));
        data.domains.push_back(spec.domains[d].name);
        for (std::size_t j = 0; j < spec.samples_per_class; ++j) {
            for (std::size_t c = 0; c < k; ++c) {
                std::mt19937_64 rng(derive_seed(domain_seed, 1 + j * k + c));
                Tensor base = data.prototypes[c];
                for (auto& v : base.data()) v += spec.sample_noise * normal(rng);
                clean.push_back(StreamSample{0, base, c, spec.domains[d].name});
                per_domain[d].push_back(StreamSample{0, shift.apply(base, rng), c, spec.domains[d].name});
            }
        }
    }
    data.clean_accuracy = zero_shot_accuracy(encoder, clean);

    for (auto& bucket : per_domain) {
        for (auto& s : bucket) data.samples.push_back(std::move(s));
    }
    if (spec.order == StreamOrder::Interleaved) {
        std::mt19937_64 order_rng(derive_seed(seed, 1));
        std::shuffle(data.samples.begin(), data.samples.end(), order_rng);
    }
    for (std::size_t i = 0; i < data.samples.size(); ++i) data.samples[i].id = i;
    return data;
}

}  // namespace

Dataset generate_dataset(const DualEncoder& encoder, const DatasetSpec& spec) {
    spec.validate();
    constexpr std::size_t kAttempts = 10;
    double best = 0.0;
    for (std::size_t a = 0; a < kAttempts; ++a) {
        const std::uint64_t seed = a == 0 ? spec.seed : derive_seed(spec.seed, 1000 + a);
        Dataset data = attempt(encoder, spec, seed);
        if (data.clean_accuracy > spec.min_clean_accuracy) {
            data.attempts = a + 1;
            return data;
        }
        best = std::max(best, data.clean_accuracy);
    }
    throw GenerationError("clean zero-shot accuracy stayed at or below " + std::to_string(spec.min_clean_accuracy) +
                          " after " + std::to_string(kAttempts) + " seeds (best " + std::to_string(best) + ")");
}

}  // namespace mint
