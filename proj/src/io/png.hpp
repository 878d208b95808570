// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace tg::io {

// 8-bit RGB image, row-major, tightly packed (3 bytes per pixel).
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  size_t byte_count() const {
    return static_cast<size_t>(width) * static_cast<size_t>(height) * 3;
  }
};

// Minimal PNG support: truecolor 8-bit, non-interlaced. The encoder always
// writes filter type 0; the decoder accepts all five standard filters.
std::vector<uint8_t> encode_png(const ImageU8& img);
ImageU8 decode_png(const std::vector<uint8_t>& bytes);
void write_png(const std::string& path, const ImageU8& img);
ImageU8 read_png(const std::string& path);

// Conversions between images and [3,H,W] float tensors in [0,1]. Values
// outside [0,1] are clamped before quantization.
ImageU8 tensor_to_image(const Tensor& t);
Tensor image_to_tensor(const ImageU8& img);

ImageU8 hflip(const ImageU8& img);

}  // namespace tg::io
