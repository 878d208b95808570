// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "core/rng.hpp"
#include "render/renderer.hpp"

namespace tg::data {

// Procedural head-and-bumps density field used as the synthetic scene
// family: one soft central sphere plus a few attached lobes, each with its
// own color tint. Every surface stays inside a ball of roughly 0.35 around
// the origin so the narrow orbit frustum sees the whole shape from any yaw.
//
// `symmetric` mirrors every lobe across the x = 0 plane, producing a
// bilaterally symmetric scene for the mirror-consistency oracles.
render::DensityField blob_head_field(std::uint64_t scene_seed,
                                     bool symmetric = false);

}  // namespace tg::data
