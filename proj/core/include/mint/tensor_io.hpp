// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat binary container of named tensors. All integers and reals are little-endian:
//
//   magic   8 bytes  "MINTTNSR"
//   version u32      1
//   count   u32      number of records
//   record* { name_len u32, name bytes (UTF-8), rank u32, extents u64[rank],
//             payload f64[prod(extents)] in row-major order }

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mint/tensor.hpp"

namespace mint {

using NamedTensor = std::pair<std::string, Tensor>;
using NamedTensors = std::vector<NamedTensor>;

inline constexpr char kTensorFileMagic[8] = {'M', 'I', 'N', 'T', 'T', 'N', 'S', 'R'};
inline constexpr std::uint32_t kTensorFileVersion = 1;

void write_tensors(std::ostream& out, const NamedTensors& tensors);
NamedTensors read_tensors(std::istream& in);

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::filesystem::path& path);

/// Looks up `name`; throws IoError when absent.
const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name);

}  // namespace mint
