// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "core/nn.hpp"

namespace tg::io {

// Binary checkpoint container. Layout (all integers little-endian):
//   magic "TGCP" | u32 version | u32 fplen | fingerprint bytes |
//   u32 count | count * (u32 namelen | name | u32 ndim | i64 dims | f64 data)
// Entries keep their insertion order, so save -> load -> save is
// byte-identical.
struct Checkpoint {
  std::string fingerprint;
  nn::NamedTensors arrays;
};

void save_checkpoint(const std::string& path, const nn::NamedTensors& arrays,
                     const std::string& fingerprint);
Checkpoint load_checkpoint(const std::string& path);

// Copies loaded arrays into an existing parameter set, matching by name and
// shape. Throws when an entry is missing or shaped differently.
void restore_into(nn::NamedTensors& params, const Checkpoint& ckpt);

}  // namespace tg::io
