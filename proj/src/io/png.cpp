// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "io/png.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tg::io {

namespace {

constexpr uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

uint32_t get_u32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) |
         (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void put_chunk(std::vector<uint8_t>& out, const char type[4],
               const std::vector<uint8_t>& payload) {
  put_u32(out, static_cast<uint32_t>(payload.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uint32_t crc =
      static_cast<uint32_t>(crc32(0, out.data() + start, uInt(out.size() - start)));
  put_u32(out, crc);
}

uint8_t paeth(uint8_t a, uint8_t b, uint8_t c) {
  const int p = int(a) + int(b) - int(c);
  const int pa = std::abs(p - int(a));
  const int pb = std::abs(p - int(b));
  const int pc = std::abs(p - int(c));
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<uint8_t> encode_png(const ImageU8& img) {
  if (img.width < 1 || img.height < 1 ||
      img.pixels.size() != img.byte_count())
    throw std::invalid_argument("encode_png: inconsistent image");

  const size_t stride = static_cast<size_t>(img.width) * 3;
  std::vector<uint8_t> raw;
  raw.reserve((stride + 1) * static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter: none
    const uint8_t* row = img.pixels.data() + static_cast<size_t>(y) * stride;
    raw.insert(raw.end(), row, row + stride);
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> deflated(bound);
  if (compress2(deflated.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("encode_png: deflate failed");
  deflated.resize(bound);

  std::vector<uint8_t> ihdr;
  put_u32(ihdr, static_cast<uint32_t>(img.width));
  put_u32(ihdr, static_cast<uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // adaptive filtering
  ihdr.push_back(0);  // no interlace

  std::vector<uint8_t> out(kSignature, kSignature + 8);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", deflated);
  put_chunk(out, "IEND", {});
  return out;
}

ImageU8 decode_png(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
    throw std::runtime_error("decode_png: not a PNG file");

  ImageU8 img;
  std::vector<uint8_t> deflated;
  bool saw_ihdr = false, saw_iend = false;
  size_t pos = 8;
  while (pos + 12 <= bytes.size() && !saw_iend) {
    const uint32_t len = get_u32(bytes.data() + pos);
    if (pos + 12 + len > bytes.size())
      throw std::runtime_error("decode_png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const uint8_t* payload = bytes.data() + pos + 8;
    const uint32_t want_crc = get_u32(payload + len);
    const uint32_t got_crc = static_cast<uint32_t>(
        crc32(0, bytes.data() + pos + 4, uInt(len + 4)));
    if (want_crc != got_crc)
      throw std::runtime_error("decode_png: chunk crc mismatch");

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw std::runtime_error("decode_png: bad IHDR");
      img.width = static_cast<int>(get_u32(payload));
      img.height = static_cast<int>(get_u32(payload + 4));
      if (img.width < 1 || img.height < 1)
        throw std::runtime_error("decode_png: bad dimensions");
      if (payload[8] != 8 || payload[9] != 2)
        throw std::runtime_error("decode_png: only 8-bit RGB supported");
      if (payload[10] != 0 || payload[11] != 0 || payload[12] != 0)
        throw std::runtime_error("decode_png: unsupported encoding flags");
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      if (!saw_ihdr) throw std::runtime_error("decode_png: IDAT before IHDR");
      deflated.insert(deflated.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    // ancillary chunks are skipped
    pos += 12 + len;
  }
  if (!saw_ihdr || !saw_iend)
    throw std::runtime_error("decode_png: missing required chunks");

  const size_t stride = static_cast<size_t>(img.width) * 3;
  std::vector<uint8_t> raw((stride + 1) * static_cast<size_t>(img.height));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, deflated.data(),
                 static_cast<uLong>(deflated.size())) != Z_OK ||
      raw_len != raw.size())
    throw std::runtime_error("decode_png: inflate failed");

  img.pixels.assign(img.byte_count(), 0);
  std::vector<uint8_t> prev(stride, 0);
  for (int y = 0; y < img.height; ++y) {
    const uint8_t* src = raw.data() + static_cast<size_t>(y) * (stride + 1);
    uint8_t* dst = img.pixels.data() + static_cast<size_t>(y) * stride;
    const uint8_t filter = src[0];
    ++src;
    for (size_t x = 0; x < stride; ++x) {
      const uint8_t left = x >= 3 ? dst[x - 3] : 0;
      const uint8_t up = prev[x];
      const uint8_t upleft = x >= 3 ? prev[x - 3] : 0;
      switch (filter) {
        case 0: dst[x] = src[x]; break;
        case 1: dst[x] = uint8_t(src[x] + left); break;
        case 2: dst[x] = uint8_t(src[x] + up); break;
        case 3: dst[x] = uint8_t(src[x] + (int(left) + int(up)) / 2); break;
        case 4: dst[x] = uint8_t(src[x] + paeth(left, up, upleft)); break;
        default: throw std::runtime_error("decode_png: bad filter type");
      }
    }
    std::memcpy(prev.data(), dst, stride);
  }
  return img;
}

void write_png(const std::string& path, const ImageU8& img) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_png: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_png: write failed for " + path);
}

ImageU8 read_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_png: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

ImageU8 tensor_to_image(const Tensor& t) {
  const Shape& s = t.shape();
  if (s.size() != 3 || s[0] != 3)
    throw std::invalid_argument("tensor_to_image: expected [3,H,W]");
  ImageU8 img;
  img.height = static_cast<int>(s[1]);
  img.width = static_cast<int>(s[2]);
  img.pixels.resize(img.byte_count());
  const i64 hw = s[1] * s[2];
  const double* p = t.data();
  for (i64 i = 0; i < hw; ++i)
    for (i64 c = 0; c < 3; ++c) {
      const double v = std::min(1.0, std::max(0.0, p[c * hw + i]));
      img.pixels[static_cast<size_t>(3 * i + c)] =
          static_cast<uint8_t>(std::lround(v * 255.0));
    }
  return img;
}

Tensor image_to_tensor(const ImageU8& img) {
  if (img.pixels.size() != img.byte_count())
    throw std::invalid_argument("image_to_tensor: inconsistent image");
  Tensor t = Tensor::zeros({3, img.height, img.width});
  const i64 hw = i64(img.height) * i64(img.width);
  double* p = t.data();
  for (i64 i = 0; i < hw; ++i)
    for (i64 c = 0; c < 3; ++c)
      p[c * hw + i] = img.pixels[static_cast<size_t>(3 * i + c)] / 255.0;
  return t;
}

ImageU8 hflip(const ImageU8& img) {
  ImageU8 out = img;
  const size_t stride = static_cast<size_t>(img.width) * 3;
  for (int y = 0; y < img.height; ++y) {
    const uint8_t* src = img.pixels.data() + static_cast<size_t>(y) * stride;
    uint8_t* dst = out.pixels.data() + static_cast<size_t>(y) * stride;
    for (int x = 0; x < img.width; ++x)
      std::memcpy(dst + size_t(3 * x), src + size_t(3 * (img.width - 1 - x)),
                  3);
  }
  return out;
}

}  // namespace tg::io
