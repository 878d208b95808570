// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

namespace tg::io {

// FIPS 180-4 SHA-256, hex-encoded. Used for artifact manifests and the
// config fingerprint stored in checkpoints.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file(const std::string& path);

}  // namespace tg::io
