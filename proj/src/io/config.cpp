// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "io/config.hpp"

#include <cstdio>
#include <functional>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "io/sha256.hpp"

namespace tg::io {

namespace {

struct Field {
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

int64_t parse_int(const std::string& key, const std::string& v) {
  size_t used = 0;
  int64_t out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size())
    throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size())
    throw std::invalid_argument("config: bad number for " + key + ": " + v);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

std::string fmt_double(double v) {
  // 17 significant digits round-trip any finite double through stod
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

#define INT_FIELD(member)                                                    \
  Field{#member, [](const RunConfig& c) { return std::to_string(c.member); }, \
        [](RunConfig& c, const std::string& v) {                             \
          c.member = parse_int(#member, v);                                  \
        }}
#define DBL_FIELD(member)                                                 \
  Field{#member, [](const RunConfig& c) { return fmt_double(c.member); }, \
        [](RunConfig& c, const std::string& v) {                          \
          c.member = parse_double(#member, v);                            \
        }}
#define BOOL_FIELD(member)                                             \
  Field{#member,                                                       \
        [](const RunConfig& c) {                                       \
          return std::string(c.member ? "true" : "false");             \
        },                                                             \
        [](RunConfig& c, const std::string& v) {                       \
          c.member = parse_bool(#member, v);                           \
        }}
#define STR_FIELD(member)                                      \
  Field{#member, [](const RunConfig& c) { return c.member; },  \
        [](RunConfig& c, const std::string& v) { c.member = v; }}

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = {
      INT_FIELD(d_z),
      INT_FIELD(d_w),
      INT_FIELD(n_layers),
      INT_FIELD(trigrid_depth),
      INT_FIELD(trigrid_channels),
      INT_FIELD(trigrid_res),
      INT_FIELD(resolution),
      INT_FIELD(n_samples),
      DBL_FIELD(near_plane),
      DBL_FIELD(far_plane),
      INT_FIELD(vis_volume),
      DBL_FIELD(learning_rate),
      INT_FIELD(batch_size),
      INT_FIELD(total_steps),
      INT_FIELD(pretrain_steps),
      INT_FIELD(seed),
      STR_FIELD(optimizer),
      BOOL_FIELD(no_disc),
      BOOL_FIELD(image_domain_disc),
      BOOL_FIELD(no_occlusion),
      BOOL_FIELD(e2_init_from_e1),
      DBL_FIELD(lambda_perceptual),
      DBL_FIELD(lambda_l2),
      DBL_FIELD(lambda_identity),
      DBL_FIELD(lambda_adv),
      DBL_FIELD(lambda_disc),
      DBL_FIELD(r1_weight),
      INT_FIELD(r1_interval),
      DBL_FIELD(truncation_psi),
      INT_FIELD(dataset_n),
      STR_FIELD(data_dir),
      INT_FIELD(n_views),
      INT_FIELD(fid_views),
      INT_FIELD(mesh_res),
  };
  return fields;
}

#undef INT_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD
#undef STR_FIELD

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("config: ") + what);
}

}  // namespace

void RunConfig::validate() const {
  require(d_z >= 1 && d_w >= 1 && n_layers >= 1, "latent dims must be >= 1");
  require(trigrid_depth >= 1 && trigrid_channels >= 1 && trigrid_res >= 4,
          "trigrid dims too small");
  require(resolution >= 1, "resolution must be >= 1");
  require(n_samples >= 2, "n_samples must be >= 2");
  require(near_plane > 0.0 && near_plane < far_plane,
          "need 0 < near_plane < far_plane");
  require(vis_volume >= 2, "vis_volume must be >= 2");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(total_steps >= 1 && pretrain_steps >= 1, "step counts must be >= 1");
  require(optimizer == "ranger" || optimizer == "adam",
          "optimizer must be ranger or adam");
  require(lambda_perceptual >= 0.0 && lambda_l2 >= 0.0 &&
              lambda_identity >= 0.0 && lambda_adv >= 0.0 &&
              lambda_disc >= 0.0 && r1_weight >= 0.0,
          "loss weights must be nonnegative");
  require(r1_interval >= 1, "r1_interval must be >= 1");
  require(truncation_psi >= 0.0 && truncation_psi <= 1.0,
          "truncation_psi must lie in [0,1]");
  require(dataset_n >= 1, "dataset_n must be >= 1");
  require(n_views >= 1 && fid_views >= 1, "view counts must be >= 1");
  require(mesh_res >= 8, "mesh_res must be >= 8");
}

std::string RunConfig::fingerprint() const {
  std::ostringstream key;
  key << "tgfp1;d_z=" << d_z << ";d_w=" << d_w << ";n_layers=" << n_layers
      << ";trigrid_depth=" << trigrid_depth
      << ";trigrid_channels=" << trigrid_channels
      << ";trigrid_res=" << trigrid_res;
  return sha256_hex(key.str());
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "# run configuration (key = value, '#' starts a comment)\n";
  for (const Field& f : registry()) out << f.name << " = " << f.get(*this) << "\n";
  return out.str();
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const Field& f : registry()) {
      if (key == f.name) {
        f.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("config: unknown key " + key);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("config: cannot open " + path);
  out << cfg.serialize();
  if (!out) throw std::runtime_error("config: write failed for " + path);
}

}  // namespace tg::io
