#pragma once

#include <string>

#include "mvgaze/nn/model.hpp"

namespace mvgaze::nn {

/// Checkpoint container: "MVGZ" magic, u32 version, then named tensors
/// (u16 name length, name bytes, u32 rank, u32 dims, float32 data),
/// little-endian.
void save_checkpoint(ToyModel& model, const std::string& path);

/// Loads tensors by name into an existing model; shapes must match.
void load_checkpoint(ToyModel& model, const std::string& path);

}  // namespace mvgaze::nn
