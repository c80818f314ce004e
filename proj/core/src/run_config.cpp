// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mint/errors.hpp"
#include "mint/random.hpp"

namespace mint {

using nlohmann::json;

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> methods{"zero-shot",    "text-only", "visual-only-general",
                                                  "visual-only-associative", "text+general", "mint"};
    return methods;
}

EncoderConfig RunConfig::resolved_encoder() const {
    EncoderConfig c = encoder;
    c.weight_seed = derive_seed(seed, 10);
    return c;
}

AdaptConfig RunConfig::resolved_adapt() const {
    AdaptConfig c = adapt;
    c.seed = derive_seed(seed, 12);
    return c;
}

DatasetSpec RunConfig::resolved_dataset() const {
    DatasetSpec d = dataset;
    d.seed = derive_seed(seed, 11);
    return d;
}

void RunConfig::validate() const {
    encoder.validate();
    adapt.validate(encoder);
    dataset.validate();
    if (methods.empty()) throw ConfigError("at least one method is required");
    std::set<std::string> seen;
    for (const auto& m : methods) {
        if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
            throw ConfigError("unknown method '" + m + "'");
        }
        if (!seen.insert(m).second) throw ConfigError("method '" + m + "' listed twice");
    }
    if (output.report.empty() || output.trace.empty()) throw ConfigError("output file names must not be empty");
}

namespace {

/// Reads the members of one JSON object and rejects anything it was not asked about.
class ObjectReader {
public:
    ObjectReader(const json& node, std::string where) : node_(node), where_(std::move(where)) {
        if (!node_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    const json* find(const char* key) {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void read(const char* key, std::size_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) throw ConfigError(path(key) + ": expected a non-negative integer");
            out = v->get<std::size_t>();
        }
    }
    void read(const char* key, std::uint64_t& out, int) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) throw ConfigError(path(key) + ": expected a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void read(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(path(key) + ": expected a number");
            out = v->get<double>();
        }
    }
    void read(const char* key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(path(key) + ": expected true or false");
            out = v->get<bool>();
        }
    }
    void read(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(path(key) + ": expected a string");
            out = v->get<std::string>();
        }
    }

    std::string path(const char* key) const { return where_ + "." + key; }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
        }
    }

private:
    const json& node_;
    std::string where_;
    std::set<std::string> seen_;
};

void parse_encoder(const json& node, EncoderConfig& c) {
    ObjectReader r(node, "encoder");
    r.read("image_dim", c.image_dim);
    r.read("text_dim", c.text_dim);
    r.read("image_depth", c.image_depth);
    r.read("text_depth", c.text_depth);
    r.read("heads", c.heads);
    r.read("mlp_ratio", c.mlp_ratio);
    r.read("grid", c.grid);
    r.read("patch_dim", c.patch_dim);
    r.read("temperature", c.temperature);
    r.read("num_classes", c.num_classes);
    r.read("text_prompt_length", c.text_prompt_length);
    r.read("class_name_length", c.class_name_length);
    r.read("query_layers", c.query_layers);
    r.read("text_embedding_scale", c.text_embedding_scale);
    r.finish();
}

void parse_adapt(const json& node, AdaptConfig& c) {
    ObjectReader r(node, "adapt");
    r.read("views", c.views);
    r.read("confidence", c.confidence);
    r.read("reward_weight", c.reward_weight);
    r.read("steps", c.steps);
    r.read("learning_rate", c.optimizer.learning_rate);
    r.read("beta1", c.optimizer.beta1);
    r.read("beta2", c.optimizer.beta2);
    r.read("eps", c.optimizer.eps);
    r.read("weight_decay", c.optimizer.weight_decay);
    std::string persistence = to_string(c.persistence);
    r.read("persistence", persistence);
    c.persistence = parse_persistence(persistence);
    r.read("bank_size", c.bank_size);
    r.read("prompt_length", c.prompt_length);
    r.read("select", c.select);
    std::string union_mode = c.union_mode == UnionMode::Set ? "set" : "multiset";
    r.read("union_mode", union_mode);
    if (union_mode == "set") {
        c.union_mode = UnionMode::Set;
    } else if (union_mode == "multiset") {
        c.union_mode = UnionMode::Multiset;
    } else {
        throw ConfigError("adapt.union_mode: expected 'set' or 'multiset'");
    }
    r.read("injection_layer", c.injection_layer);
    r.finish();
}

void parse_dataset(const json& node, DatasetSpec& d) {
    ObjectReader r(node, "dataset");
    r.read("samples_per_class", d.samples_per_class);
    r.read("sample_noise", d.sample_noise);
    r.read("min_clean_accuracy", d.min_clean_accuracy);
    r.read("refine_steps", d.refine_steps);
    std::string order = to_string(d.order);
    r.read("order", order);
    d.order = parse_stream_order(order);
    if (const json* domains = r.find("domains")) {
        if (!domains->is_array()) throw ConfigError("dataset.domains: expected an array");
        d.domains.clear();
        for (std::size_t i = 0; i < domains->size(); ++i) {
            const std::string where = "dataset.domains[" + std::to_string(i) + "]";
            ObjectReader dr((*domains)[i], where);
            DomainSpec domain;
            dr.read("name", domain.name);
            if (const json* shifts = dr.find("shifts")) {
                if (!shifts->is_array()) throw ConfigError(where + ".shifts: expected an array");
                for (std::size_t j = 0; j < shifts->size(); ++j) {
                    ObjectReader sr((*shifts)[j], where + ".shifts[" + std::to_string(j) + "]");
                    std::string kind;
                    sr.read("kind", kind);
                    ShiftOperator op;
                    op.kind = parse_shift_kind(kind);
                    sr.read("value", op.value);
                    sr.finish();
                    domain.shifts.push_back(op);
                }
            }
            dr.finish();
            d.domains.push_back(std::move(domain));
        }
    }
    r.finish();
}

void parse_output(const json& node, OutputPaths& o) {
    ObjectReader r(node, "output");
    std::string dir = o.directory.string();
    r.read("directory", dir);
    o.directory = dir;
    r.read("report", o.report);
    r.read("trace", o.trace);
    r.read("snapshots", o.snapshots);
    r.finish();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig config;
    ObjectReader r(root, "config");
    r.read("seed", config.seed, 0);
    if (const json* v = r.find("encoder")) parse_encoder(*v, config.encoder);
    if (const json* v = r.find("adapt")) parse_adapt(*v, config.adapt);
    if (const json* v = r.find("dataset")) parse_dataset(*v, config.dataset);
    if (const json* v = r.find("methods")) {
        if (!v->is_array()) throw ConfigError("config.methods: expected an array of strings");
        config.methods.clear();
        for (const auto& m : *v) {
            if (!m.is_string()) throw ConfigError("config.methods: expected an array of strings");
            config.methods.push_back(m.get<std::string>());
        }
    }
    if (const json* v = r.find("output")) parse_output(*v, config.output);
    r.finish();
    config.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str());
}

namespace {

json config_document(const RunConfig& config) {
    const auto& e = config.encoder;
    const auto& a = config.adapt;
    const auto& d = config.dataset;
    json domains = json::array();
    for (const auto& domain : d.domains) {
        json shifts = json::array();
        for (const auto& s : domain.shifts) shifts.push_back({{"kind", to_string(s.kind)}, {"value", s.value}});
        domains.push_back({{"name", domain.name}, {"shifts", shifts}});
    }
    json root = {
        {"seed", config.seed},
        {"encoder",
         {{"image_dim", e.image_dim},
          {"text_dim", e.text_dim},
          {"image_depth", e.image_depth},
          {"text_depth", e.text_depth},
          {"heads", e.heads},
          {"mlp_ratio", e.mlp_ratio},
          {"grid", e.grid},
          {"patch_dim", e.patch_dim},
          {"temperature", e.temperature},
          {"num_classes", e.num_classes},
          {"text_prompt_length", e.text_prompt_length},
          {"class_name_length", e.class_name_length},
          {"query_layers", e.query_layers},
          {"text_embedding_scale", e.text_embedding_scale}}},
        {"adapt",
         {{"views", a.views},
          {"confidence", a.confidence},
          {"reward_weight", a.reward_weight},
          {"steps", a.steps},
          {"learning_rate", a.optimizer.learning_rate},
          {"beta1", a.optimizer.beta1},
          {"beta2", a.optimizer.beta2},
          {"eps", a.optimizer.eps},
          {"weight_decay", a.optimizer.weight_decay},
          {"persistence", to_string(a.persistence)},
          {"bank_size", a.bank_size},
          {"prompt_length", a.prompt_length},
          {"select", a.select},
          {"union_mode", a.union_mode == UnionMode::Set ? "set" : "multiset"},
          {"injection_layer", a.injection_layer}}},
        {"dataset",
         {{"samples_per_class", d.samples_per_class},
          {"sample_noise", d.sample_noise},
          {"min_clean_accuracy", d.min_clean_accuracy},
          {"refine_steps", d.refine_steps},
          {"order", to_string(d.order)},
          {"domains", domains}}},
        {"methods", config.methods},
        {"output",
         {{"directory", config.output.directory.string()},
          {"report", config.output.report},
          {"trace", config.output.trace},
          {"snapshots", config.output.snapshots}}},
    };
    return root;
}

}  // namespace

std::string to_json(const RunConfig& config) { return config_document(config).dump(2); }

std::string fingerprint(const RunConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    // Where the files go does not change what is measured.
    json doc = config_document(config);
    doc.erase("output");
    for (unsigned char c : doc.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mint
