// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "agrgan/networks.hpp"

namespace agrgan {

// Binary checkpoint layout, all integers little-endian:
//
//   "AGRGAN01"                  8 bytes magic
//   version                     u8 (currently 1)
//   count                       u32 number of tensors
//   count x {
//     name_length               u32
//     name                      name_length bytes, UTF-8
//     rank                      u32
//     dims                      rank x u64
//     payload                   product(dims) x float64 (IEEE-754, LE)
//   }
//
// Tensors are written in the order given; load → save reproduces the file byte for byte.

inline constexpr char kCheckpointMagic[8] = {'A', 'G', 'R', 'G', 'A', 'N', '0', '1'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

std::string encode_checkpoint(const std::vector<CheckpointTensor>& tensors);
/// Throws FormatError on bad magic, unknown version, or truncation.
std::vector<CheckpointTensor> decode_checkpoint(const std::string& bytes);

/// Writes via a temporary file and rename so a failed write never leaves a
/// truncated checkpoint at `path`. Throws FormatError on I/O failure.
void write_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointTensor>& tensors);
std::vector<CheckpointTensor> read_checkpoint(const std::filesystem::path& path);

/// Snapshot of model slots as checkpoint tensors.
std::vector<CheckpointTensor> snapshot(const std::vector<nn::StateEntry>& entries);

/// Copies `tensors` into `entries`. Every entry must be present with an
/// identical shape; otherwise FormatError names the first mismatched tensor.
void restore(const std::vector<CheckpointTensor>& tensors, const std::vector<nn::StateEntry>& entries);

/// Profile metadata tensor stored as "meta.profile".
CheckpointTensor profile_tensor(const ScaleProfile& profile);
ScaleProfile profile_from_tensor(const CheckpointTensor& tensor);

/// Whole-model save/load. load_agrgan rebuilds the networks from the stored
/// profile; load_into additionally requires it to equal the model's profile.
void save_agrgan(AgrGan& model, const std::filesystem::path& path);
AgrGan load_agrgan(const std::filesystem::path& path);
void load_into(AgrGan& model, const std::filesystem::path& path);

/// Deep copy (Tensor handles share storage, so plain copies alias parameters).
AgrGan clone(AgrGan& model);

}  // namespace agrgan
