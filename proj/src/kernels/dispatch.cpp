// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "kernels/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace tg::kernels {

const KernelTable* avx2_table();  // defined in kernels_avx2.cpp, may be null

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
         avx2_table() != nullptr;
#else
  return false;
#endif
}

namespace {

const KernelTable* resolve(const std::string& name) {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2") {
    if (!cpu_has_avx2())
      throw std::runtime_error("kernels: avx2 requested but not available");
    return avx2_table();
  }
  if (name == "auto")
    return cpu_has_avx2() ? avx2_table() : &scalar_table();
  throw std::runtime_error("kernels: unknown table '" + name +
                           "' (expected auto, scalar or avx2)");
}

const KernelTable*& slot() {
  static const KernelTable* t = nullptr;
  return t;
}

}  // namespace

const KernelTable& active() {
  const KernelTable*& t = slot();
  if (!t) {
    const char* env = std::getenv("TRIGRID_KERNELS");
    t = resolve(env ? env : "auto");
  }
  return *t;
}

void select(const std::string& name) { slot() = resolve(name); }

}  // namespace tg::kernels
