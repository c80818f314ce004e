// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/trace.hpp"

#include <json.hpp>

#include "mint/errors.hpp"

namespace mint {

namespace {

nlohmann::json retrieval_json(const RetrievalResult& retrieval) {
    auto layers = nlohmann::json::array();
    for (const auto& layer : retrieval.layers) layers.push_back(layer.indices);
    return layers;
}

}  // namespace

std::string episode_to_json(const Episode& e, const std::string& method) {
    nlohmann::json j;
    j["method"] = method;
    j["sample_id"] = e.sample_id;
    j["domain"] = e.domain;
    j["label"] = e.label ? nlohmann::json(*e.label) : nlohmann::json(nullptr);
    j["pre_loss"] = e.pre_loss;
    j["post_loss"] = e.post_loss;
    j["selected_views"] = e.selected_views;
    auto retrievals = nlohmann::json::array();
    for (const auto& r : e.selected_retrievals) retrievals.push_back(retrieval_json(r));
    j["selected_retrievals"] = retrievals;
    j["final_retrieval"] = retrieval_json(e.final_retrieval);
    j["prediction"] = e.prediction;
    j["correct"] = e.correct;
    j["aborted"] = e.aborted;
    if (e.aborted) j["abort_reason"] = e.abort_reason;
    return j.dump();
}

TraceWriter::TraceWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open trace " + path.string() + " for writing");
}

void TraceWriter::write(const Episode& episode, const std::string& method) {
    out_ << episode_to_json(episode, method) << '\n';
    if (!out_) throw IoError("failed writing trace " + path_.string());
}

void TraceWriter::flush() {
    out_.flush();
    if (!out_) throw IoError("failed writing trace " + path_.string());
}

}  // namespace mint
