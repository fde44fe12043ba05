#include "fedsense/checkpoint.hpp"

#include <fstream>
#include <string>

#include "fedsense/binary_io.hpp"

namespace fedsense::nn {

void write_checkpoint(std::ostream& out, const ModelWeights& w) {
  io::put_magic(out, "FSCK");
  io::put_le<std::uint32_t>(out, kCheckpointVersion);
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.signal_length));
  io::put_le<std::uint32_t>(out, kParamCount);
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto& info = param_info(i);
    io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(info.name.size()));
    out.write(info.name.data(), static_cast<std::streamsize>(info.name.size()));
    io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(info.rank));
    for (std::size_t d = 0; d < info.rank; ++d) {
      io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(info.shape[d]));
    }
    for (float v : w.tensors[i]) io::put_f32(out, v);
  }
  if (!out) throw IoError("failed writing checkpoint");
}

ModelWeights read_checkpoint(std::istream& in) {
  io::expect_magic(in, "FSCK");
  const auto version = io::get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  auto w = ModelWeights::zeros(io::get_le<std::uint32_t>(in));
  const auto count = io::get_le<std::uint32_t>(in);
  if (count != kParamCount) {
    throw ShapeMismatch("checkpoint holds " + std::to_string(count) +
                        " tensors, expected " + std::to_string(kParamCount));
  }
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto& info = param_info(i);
    std::string name(io::get_le<std::uint32_t>(in), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) {
      throw IoError("truncated tensor name");
    }
    if (name != info.name) {
      throw ShapeMismatch("unexpected tensor '" + name + "', expected '" +
                          std::string(info.name) + "'");
    }
    const auto rank = io::get_le<std::uint32_t>(in);
    if (rank != info.rank) throw ShapeMismatch("rank mismatch for " + name);
    for (std::size_t d = 0; d < rank; ++d) {
      if (io::get_le<std::uint32_t>(in) != info.shape[d]) {
        throw ShapeMismatch("shape mismatch for " + name);
      }
    }
    for (auto& v : w.tensors[i]) v = io::get_f32(in);
  }
  return w;
}

void save_checkpoint(const std::filesystem::path& path, const ModelWeights& w) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, w);
}

ModelWeights load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace fedsense::nn
