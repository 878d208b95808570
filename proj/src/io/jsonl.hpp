// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tg::io {

// Append-only line-delimited JSON, used for training metrics logs.
class JsonlWriter {
 public:
  JsonlWriter(const std::string& path, bool append)
      : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw std::runtime_error("jsonl: cannot open " + path);
  }

  void write(const nlohmann::ordered_json& record) {
    out_ << record.dump() << "\n";
    out_.flush();
    if (!out_) throw std::runtime_error("jsonl: write failed");
  }

 private:
  std::ofstream out_;
};

inline std::vector<nlohmann::ordered_json> read_jsonl(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("jsonl: cannot open " + path);
  std::vector<nlohmann::ordered_json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(nlohmann::ordered_json::parse(line));
  }
  return records;
}

}  // namespace tg::io
