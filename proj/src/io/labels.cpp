// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "io/labels.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace tg::io {

void write_labels(const std::string& path,
                  const std::vector<LabelEntry>& entries) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& [name, rec] : entries) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (double v : rec) arr.push_back(v);
    root[name] = std::move(arr);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("labels: cannot open " + path);
  out << root.dump(1) << "\n";
  if (!out) throw std::runtime_error("labels: write failed for " + path);
}

std::vector<LabelEntry> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("labels: cannot open " + path);
  nlohmann::ordered_json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("labels: parse error in " + path + ": " +
                             e.what());
  }
  if (!root.is_object())
    throw std::runtime_error("labels: top level must be an object");
  std::vector<LabelEntry> entries;
  entries.reserve(root.size());
  for (const auto& [name, value] : root.items()) {
    if (!value.is_array() || value.size() != 25)
      throw std::runtime_error("labels: entry " + name +
                               " is not a 25-number list");
    LabelEntry e;
    e.first = name;
    for (size_t i = 0; i < 25; ++i) {
      if (!value[i].is_number())
        throw std::runtime_error("labels: non-numeric value in " + name);
      e.second[i] = value[i].get<double>();
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace tg::io
