// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "mint/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "mint/errors.hpp"

namespace mint {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes;
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in) throw IoError("tensor file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

// Upper bounds that keep a corrupt header from driving huge allocations.
constexpr std::uint32_t kMaxNameLength = 4096;
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

}  // namespace

void write_tensors(std::ostream& out, const NamedTensors& tensors) {
    std::set<std::string> seen;
    out.write(kTensorFileMagic, sizeof(kTensorFileMagic));
    put_le<std::uint32_t>(out, kTensorFileVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        if (!seen.insert(name).second) throw IoError("duplicate tensor name '" + name + "'");
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
        for (auto e : tensor.shape()) put_le<std::uint64_t>(out, e);
        for (auto v : tensor.data()) put_le<double>(out, v);
    }
    if (!out) throw IoError("failed to write tensor stream");
}

NamedTensors read_tensors(std::istream& in) {
    char magic[sizeof(kTensorFileMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kTensorFileMagic, sizeof(magic)) != 0) throw IoError("not a tensor file");
    if (const auto version = get_le<std::uint32_t>(in); version != kTensorFileVersion) {
        throw IoError("unsupported tensor file version " + std::to_string(version));
    }
    const auto count = get_le<std::uint32_t>(in);
    NamedTensors out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = get_le<std::uint32_t>(in);
        if (name_len > kMaxNameLength) throw IoError("tensor name too long");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw IoError("tensor file truncated");
        const auto rank = get_le<std::uint32_t>(in);
        if (rank == 0 || rank > kMaxRank) throw IoError("bad rank for tensor '" + name + "'");
        Shape shape(rank);
        std::uint64_t numel = 1;
        for (auto& e : shape) {
            const auto extent = get_le<std::uint64_t>(in);
            if (extent == 0 || extent > kMaxElements) throw IoError("bad extent for tensor '" + name + "'");
            numel *= extent;
            if (numel > kMaxElements) throw IoError("tensor '" + name + "' too large");
            e = static_cast<std::size_t>(extent);
        }
        std::vector<Real> data(static_cast<std::size_t>(numel));
        for (auto& v : data) v = get_le<double>(in);
        out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    return out;
}

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_tensors(out, tensors);
}

NamedTensors load_tensors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_tensors(in);
}

const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name) {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& nt) { return nt.first == name; });
    if (it == tensors.end()) throw IoError("tensor '" + name + "' not found");
    return it->second;
}

}  // namespace mint
