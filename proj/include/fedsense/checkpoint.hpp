#pragma once

#include <filesystem>
#include <iosfwd>

#include "fedsense/nn.hpp"

namespace fedsense::nn {

// Binary checkpoint, all integers and floats little-endian:
//   "FSCK" | u32 version | u32 signal_length | u32 tensor_count
//   per tensor: u32 name_len | name | u32 rank | u32 dims[rank] | f32 data
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ModelWeights& w);
ModelWeights read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ModelWeights& w);
ModelWeights load_checkpoint(const std::filesystem::path& path);

}  // namespace fedsense::nn
