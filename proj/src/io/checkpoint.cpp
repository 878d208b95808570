// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "io/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace tg::io {

namespace {

constexpr char kMagic[4] = {'T', 'G', 'C', 'P'};
constexpr uint32_t kVersion = 1;

// The project only targets little-endian hosts; raw structs are written as
// scalar fields through these helpers so the layout stays explicit.
void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.write(b, 4);
}

void put_i64(std::ostream& out, int64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.write(b, 8);
}

uint32_t get_u32(std::istream& in) {
  char b[4];
  in.read(b, 4);
  if (!in) throw std::runtime_error("checkpoint: unexpected end of file");
  uint32_t v;
  std::memcpy(&v, b, 4);
  return v;
}

int64_t get_i64(std::istream& in) {
  char b[8];
  in.read(b, 8);
  if (!in) throw std::runtime_error("checkpoint: unexpected end of file");
  int64_t v;
  std::memcpy(&v, b, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const nn::NamedTensors& arrays,
                     const std::string& fingerprint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(fingerprint.size()));
  out.write(fingerprint.data(),
            static_cast<std::streamsize>(fingerprint.size()));
  put_u32(out, static_cast<uint32_t>(arrays.items.size()));
  for (const auto& [name, tensor] : arrays.items) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Shape& shape = tensor.shape();
    put_u32(out, static_cast<uint32_t>(shape.size()));
    for (i64 d : shape) put_i64(out, d);
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(sizeof(double) * tensor.numel()));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const uint32_t version = get_u32(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  Checkpoint ckpt;
  const uint32_t fplen = get_u32(in);
  ckpt.fingerprint.resize(fplen);
  in.read(ckpt.fingerprint.data(), fplen);
  if (!in) throw std::runtime_error("checkpoint: unexpected end of file");
  const uint32_t count = get_u32(in);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t namelen = get_u32(in);
    std::string name(namelen, '\0');
    in.read(name.data(), namelen);
    if (!in) throw std::runtime_error("checkpoint: unexpected end of file");
    const uint32_t ndim = get_u32(in);
    Shape shape(ndim);
    i64 numel = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      shape[d] = get_i64(in);
      if (shape[d] < 0) throw std::runtime_error("checkpoint: negative dim");
      numel *= shape[d];
    }
    std::vector<double> data(static_cast<size_t>(numel));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(sizeof(double) * data.size()));
    if (!in) throw std::runtime_error("checkpoint: unexpected end of file");
    ckpt.arrays.add(name, Tensor::from_data(shape, std::move(data)));
  }
  return ckpt;
}

void restore_into(nn::NamedTensors& params, const Checkpoint& ckpt) {
  for (auto& [name, tensor] : params.items) {
    const Tensor* src = ckpt.arrays.find(name);
    if (src == nullptr)
      throw std::runtime_error("checkpoint: missing array " + name);
    if (src->shape() != tensor.shape())
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    tensor.assign_data(*src);
  }
}

}  // namespace tg::io
