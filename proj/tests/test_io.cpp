// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "io/checkpoint.hpp"
#include "io/config.hpp"
#include "io/jsonl.hpp"
#include "io/labels.hpp"
#include "io/obj.hpp"
#include "io/png.hpp"
#include "io/sha256.hpp"

using namespace tg;
using namespace tg::io;
using tg::nn::NamedTensors;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "trigrid_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
}

ImageU8 random_image(int w, int h, Rng& rng) {
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.pixels.resize(img.byte_count());
  for (auto& p : img.pixels) p = uint8_t(rng.below(256));
  return img;
}

// Independent PNG builder used to exercise the decoder's filter handling:
// applies the chosen per-row filter forward, so decoding must invert it.
std::vector<uint8_t> build_png_with_filters(const ImageU8& img,
                                            const std::vector<uint8_t>& row_filters) {
  REQUIRE(row_filters.size() == size_t(img.height));
  const size_t stride = size_t(img.width) * 3;
  auto paeth = [](int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    return pb <= pc ? b : c;
  };
  std::vector<uint8_t> raw;
  std::vector<uint8_t> prev(stride, 0);
  for (int y = 0; y < img.height; ++y) {
    const uint8_t* row = img.pixels.data() + size_t(y) * stride;
    const uint8_t ft = row_filters[size_t(y)];
    raw.push_back(ft);
    for (size_t x = 0; x < stride; ++x) {
      const int left = x >= 3 ? row[x - 3] : 0;
      const int up = prev[x];
      const int upleft = x >= 3 ? prev[x - 3] : 0;
      int predictor = 0;
      switch (ft) {
        case 0: predictor = 0; break;
        case 1: predictor = left; break;
        case 2: predictor = up; break;
        case 3: predictor = (left + up) / 2; break;
        case 4: predictor = paeth(left, up, upleft); break;
        default: FAIL("bad filter in test builder");
      }
      raw.push_back(uint8_t(int(row[x]) - predictor));
    }
    std::memcpy(prev.data(), row, stride);
  }

  uLongf bound = compressBound(uLong(raw.size()));
  std::vector<uint8_t> deflated(bound);
  REQUIRE(compress2(deflated.data(), &bound, raw.data(), uLong(raw.size()),
                    6) == Z_OK);
  deflated.resize(bound);

  auto put_u32 = [](std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
  };
  auto put_chunk = [&](std::vector<uint8_t>& v, const char* type,
                       const std::vector<uint8_t>& payload) {
    put_u32(v, uint32_t(payload.size()));
    const size_t start = v.size();
    v.insert(v.end(), type, type + 4);
    v.insert(v.end(), payload.begin(), payload.end());
    put_u32(v, uint32_t(crc32(0, v.data() + start, uInt(v.size() - start))));
  };

  std::vector<uint8_t> ihdr;
  put_u32(ihdr, uint32_t(img.width));
  put_u32(ihdr, uint32_t(img.height));
  for (uint8_t b : {uint8_t(8), uint8_t(2), uint8_t(0), uint8_t(0), uint8_t(0)})
    ihdr.push_back(b);

  std::vector<uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", deflated);
  put_chunk(out, "IEND", {});
  return out;
}

}  // namespace

TEST_CASE("sha256 matches published test vectors") {
  CHECK(sha256_hex(std::string()) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex(std::string("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string(
            "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  const std::string million(1000000, 'a');
  CHECK(sha256_hex(million) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");

  const auto dir = temp_dir();
  const auto path = (dir / "hash_input.bin").string();
  std::ofstream(path, std::ios::binary) << "abc";
  CHECK(sha256_file(path) == sha256_hex(std::string("abc")));
  CHECK_THROWS(sha256_file((dir / "missing.bin").string()));
}

TEST_CASE("png round-trips pixels exactly") {
  Rng rng = Rng::seeded(21, "io.png");
  for (auto [w, h] : {std::pair{1, 1}, {3, 2}, {16, 16}, {37, 11}}) {
    const ImageU8 img = random_image(w, h, rng);
    const ImageU8 back = decode_png(encode_png(img));
    REQUIRE(back.width == w);
    REQUIRE(back.height == h);
    CHECK(back.pixels == img.pixels);
  }
}

TEST_CASE("png file io and deterministic bytes") {
  Rng rng = Rng::seeded(22, "io.png.file");
  const ImageU8 img = random_image(20, 14, rng);
  const auto dir = temp_dir();
  const auto path = (dir / "round.png").string();
  write_png(path, img);
  const ImageU8 back = read_png(path);
  CHECK(back.pixels == img.pixels);
  CHECK(encode_png(img) == read_file_bytes(path));
  // re-encoding the same pixels yields the same bytes, so artifact hashes
  // are reproducible
  CHECK(sha256_hex(encode_png(img).data(), encode_png(img).size()) ==
        sha256_file(path));
}

TEST_CASE("png decoder handles every standard filter type") {
  Rng rng = Rng::seeded(23, "io.png.filters");
  const ImageU8 img = random_image(5, 6, rng);
  const std::vector<uint8_t> filters = {0, 1, 2, 3, 4, 4};
  const ImageU8 back = decode_png(build_png_with_filters(img, filters));
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("png decoder rejects malformed input") {
  Rng rng = Rng::seeded(24, "io.png.bad");
  const ImageU8 img = random_image(8, 8, rng);
  auto bytes = encode_png(img);

  std::vector<uint8_t> not_png = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK_THROWS(decode_png(not_png));

  auto truncated = bytes;
  truncated.resize(truncated.size() / 2);
  CHECK_THROWS(decode_png(truncated));

  auto corrupted = bytes;
  corrupted[30] ^= 0xff;  // inside IHDR payload, breaks the crc
  CHECK_THROWS(decode_png(corrupted));
}

TEST_CASE("tensor image conversions quantize and clamp") {
  Tensor t = Tensor::zeros({3, 2, 2});
  double* p = t.data();
  p[0] = 0.0;
  p[1] = 1.0;
  p[2] = 0.5;
  p[3] = -0.25;     // clamps to 0
  p[4 + 0] = 1.75;  // clamps to 1
  const ImageU8 img = tensor_to_image(t);
  CHECK(img.pixels[0] == 0);
  CHECK(img.pixels[3] == 255);
  CHECK(img.pixels[6] == 128);
  CHECK(img.pixels[9] == 0);
  CHECK(img.pixels[1] == 255);

  Rng rng = Rng::seeded(25, "io.convert");
  const ImageU8 rand_img = random_image(9, 7, rng);
  const ImageU8 back = tensor_to_image(image_to_tensor(rand_img));
  CHECK(back.pixels == rand_img.pixels);

  CHECK_THROWS(tensor_to_image(Tensor::zeros({1, 4, 4})));
  CHECK_THROWS(tensor_to_image(Tensor::zeros({4})));
}

TEST_CASE("hflip is an involution and swaps columns") {
  Rng rng = Rng::seeded(26, "io.hflip");
  const ImageU8 img = random_image(10, 4, rng);
  const ImageU8 flipped = hflip(img);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(flipped.pixels[size_t(3 * (y * img.width + x) + c)] ==
              img.pixels[size_t(3 * (y * img.width + (img.width - 1 - x)) + c)]);
  CHECK(hflip(flipped).pixels == img.pixels);
}

TEST_CASE("checkpoint round-trips arrays and bytes") {
  Rng rng = Rng::seeded(27, "io.ckpt");
  NamedTensors arrays;
  arrays.add("enc.conv1.w", Tensor::randn({4, 3, 3, 3}, rng));
  arrays.add("enc.conv1.b", Tensor::randn({4}, rng));
  arrays.add("w_avg", Tensor::randn({64}, rng));
  arrays.add("scalar.t", Tensor::scalar(17.0));

  const auto dir = temp_dir();
  const auto path1 = (dir / "a.ckpt").string();
  const auto path2 = (dir / "b.ckpt").string();
  const std::string fp = RunConfig().fingerprint();
  save_checkpoint(path1, arrays, fp);

  const Checkpoint loaded = load_checkpoint(path1);
  CHECK(loaded.fingerprint == fp);
  REQUIRE(loaded.arrays.items.size() == arrays.items.size());
  for (size_t i = 0; i < arrays.items.size(); ++i) {
    CHECK(loaded.arrays.items[i].first == arrays.items[i].first);
    const Tensor& a = loaded.arrays.items[i].second;
    const Tensor& b = arrays.items[i].second;
    REQUIRE(a.shape() == b.shape());
    for (i64 k = 0; k < a.numel(); ++k) CHECK(a.data()[k] == b.data()[k]);
  }

  // save -> load -> save must be byte-identical
  save_checkpoint(path2, loaded.arrays, loaded.fingerprint);
  CHECK(read_file_bytes(path1) == read_file_bytes(path2));
}

TEST_CASE("checkpoint rejects corrupt files and mismatched restores") {
  const auto dir = temp_dir();
  NamedTensors arrays;
  arrays.add("w", Tensor::ones({2, 2}));
  const auto path = (dir / "c.ckpt").string();
  save_checkpoint(path, arrays, "fp");

  auto bytes = read_file_bytes(path);
  const auto bad = (dir / "bad.ckpt").string();

  {
    auto b = bytes;
    b[0] = 'X';
    std::ofstream(bad, std::ios::binary)
        .write(reinterpret_cast<char*>(b.data()), std::streamsize(b.size()));
    CHECK_THROWS(load_checkpoint(bad));
  }
  {
    auto b = bytes;
    b[4] = 9;  // unsupported version
    std::ofstream(bad, std::ios::binary)
        .write(reinterpret_cast<char*>(b.data()), std::streamsize(b.size()));
    CHECK_THROWS(load_checkpoint(bad));
  }
  {
    auto b = bytes;
    b.resize(b.size() - 5);
    std::ofstream(bad, std::ios::binary)
        .write(reinterpret_cast<char*>(b.data()), std::streamsize(b.size()));
    CHECK_THROWS(load_checkpoint(bad));
  }
  CHECK_THROWS(load_checkpoint((dir / "nope.ckpt").string()));

  const Checkpoint ok = load_checkpoint(path);
  NamedTensors wrong_shape;
  wrong_shape.add("w", Tensor::ones({4}));
  CHECK_THROWS(restore_into(wrong_shape, ok));
  NamedTensors wrong_name;
  wrong_name.add("w2", Tensor::ones({2, 2}));
  CHECK_THROWS(restore_into(wrong_name, ok));

  NamedTensors good;
  good.add("w", Tensor::zeros({2, 2}));
  restore_into(good, ok);
  CHECK(good.items[0].second.data()[3] == 1.0);
}

TEST_CASE("config defaults are valid and serialization round-trips") {
  RunConfig cfg;
  cfg.validate();
  cfg.learning_rate = 3.0e-4;
  cfg.truncation_psi = 0.7071067811865476;
  cfg.no_disc = true;
  cfg.optimizer = "adam";
  cfg.data_dir = "runs/exp 1";
  cfg.total_steps = 123456789;

  const RunConfig back = parse_config_text(cfg.serialize());
  CHECK(back.learning_rate == cfg.learning_rate);
  CHECK(back.truncation_psi == cfg.truncation_psi);
  CHECK(back.no_disc == cfg.no_disc);
  CHECK(back.optimizer == cfg.optimizer);
  CHECK(back.data_dir == cfg.data_dir);
  CHECK(back.total_steps == cfg.total_steps);
  CHECK(back.serialize() == cfg.serialize());
}

TEST_CASE("config parser rejects unknown keys and bad values") {
  CHECK_THROWS(parse_config_text("batch_sizee = 3\n"));
  CHECK_THROWS(parse_config_text("batch_size = three\n"));
  CHECK_THROWS(parse_config_text("batch_size = 3.5\n"));
  CHECK_THROWS(parse_config_text("no_disc = yes\n"));
  CHECK_THROWS(parse_config_text("just a line\n"));
  CHECK_THROWS(parse_config_text("truncation_psi = 1.25\n"));
  CHECK_THROWS(parse_config_text("optimizer = sgd\n"));
  CHECK_THROWS(parse_config_text("near_plane = 5\nfar_plane = 2\n"));

  const RunConfig cfg = parse_config_text(
      "# comment only\n"
      "\n"
      "  batch_size = 5   # trailing comment\n"
      "\tseed=42\n");
  CHECK(cfg.batch_size == 5);
  CHECK(cfg.seed == 42);
}

TEST_CASE("config fingerprint tracks architecture fields only") {
  RunConfig a;
  RunConfig b;
  b.learning_rate = 0.5;
  b.total_steps = 7;
  b.no_occlusion = true;
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint().size() == 64);

  RunConfig c;
  c.trigrid_channels = 16;
  CHECK(c.fingerprint() != a.fingerprint());
  RunConfig d;
  d.d_w = 32;
  CHECK(d.fingerprint() != a.fingerprint());
}

TEST_CASE("config file io") {
  const auto dir = temp_dir();
  const auto path = (dir / "run.cfg").string();
  RunConfig cfg;
  cfg.seed = 99;
  save_config(path, cfg);
  const RunConfig back = load_config(path);
  CHECK(back.seed == 99);
  CHECK(back.serialize() == cfg.serialize());
  CHECK_THROWS(load_config((dir / "missing.cfg").string()));
}

TEST_CASE("labels json round-trips pose records bit-exactly") {
  Rng rng = Rng::seeded(28, "io.labels");
  std::vector<LabelEntry> entries;
  for (int i = 0; i < 5; ++i) {
    LabelEntry e;
    e.first = "img_" + std::to_string(i) + ".png";
    for (auto& v : e.second) v = rng.normal() * 3.0;
    entries.push_back(e);
  }
  const auto dir = temp_dir();
  const auto path = (dir / "labels.json").string();
  write_labels(path, entries);
  const auto back = read_labels(path);
  REQUIRE(back.size() == entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    CHECK(back[i].first == entries[i].first);
    for (size_t k = 0; k < 25; ++k)
      CHECK(back[i].second[k] == entries[i].second[k]);
  }

  std::ofstream(path) << "{\"img.png\": [1, 2, 3]}";
  CHECK_THROWS(read_labels(path));
  std::ofstream(path) << "[1, 2]";
  CHECK_THROWS(read_labels(path));
  CHECK_THROWS(read_labels((dir / "missing.json").string()));
}

TEST_CASE("obj writer emits one-based faces and validates indices") {
  Mesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.25, -0.5, 1e-3}};
  mesh.faces = {{0, 1, 2}, {1, 3, 2}};
  CHECK(mesh.valid_indices());

  const auto dir = temp_dir();
  const auto path = (dir / "mesh.obj").string();
  write_obj(path, mesh);

  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 1 + 4 + 2);
  CHECK(lines[1] == "v 0 0 0");
  CHECK(lines[4] == "v 0.25 -0.5 0.001");
  CHECK(lines[5] == "f 1 2 3");
  CHECK(lines[6] == "f 2 4 3");

  mesh.faces.push_back({0, 1, 9});
  CHECK_FALSE(mesh.valid_indices());
  CHECK_THROWS(write_obj(path, mesh));

  Mesh empty;
  write_obj(path, empty);  // empty iso-surface is representable
  const auto bytes = read_file_bytes(path);
  CHECK(!bytes.empty());
}

TEST_CASE("jsonl writer appends parseable records") {
  const auto dir = temp_dir();
  const auto path = (dir / "metrics.jsonl").string();
  {
    JsonlWriter w(path, false);
    w.write({{"step", 0}, {"loss", 1.5}, {"r1_applied", true}});
    w.write({{"step", 1}, {"loss", 1.25}, {"r1_applied", false}});
  }
  {
    JsonlWriter w(path, true);
    w.write({{"step", 2}, {"loss", 1.0}});
  }
  const auto records = read_jsonl(path);
  REQUIRE(records.size() == 3);
  CHECK(records[0]["step"] == 0);
  CHECK(records[0]["r1_applied"] == true);
  CHECK(records[2]["loss"] == 1.0);

  // fresh open with append=false truncates
  JsonlWriter w(path, false);
  w.write({{"step", 9}});
  CHECK(read_jsonl(path).size() == 1);
}
