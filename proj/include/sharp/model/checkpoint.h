// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Tensor container: 4-byte magic, u32 version, u32 metadata length + metadata
// (JSON text), u32 tensor count, name table (u32 name length, name bytes, u32
// rank, u32 dims), then every tensor's little-endian f32 data in table order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sharp/model/weights.h"

namespace sharp::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    enum class Kind { Io, BadMagic, VersionMismatch, Truncated, Format };
    CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct TensorFile {
    std::string magic;
    std::uint32_t version = kCheckpointVersion;
    std::string metadata;
    std::vector<std::pair<std::string, Tensor<float>>> tensors;
};

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path, const std::string& magic,
                            std::uint32_t version = kCheckpointVersion);

void save_checkpoint(const WeightStore& w, const std::filesystem::path& path);
WeightStore load_checkpoint(const std::filesystem::path& path);

}  // namespace sharp::model
