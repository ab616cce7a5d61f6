// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/aabb.hpp>
#include <grtx/accel.hpp>
#include <grtx/bvh.hpp>
#include <grtx/camera.hpp>
#include <grtx/checkpoint.hpp>
#include <grtx/error.hpp>
#include <grtx/gaussian.hpp>
#include <grtx/image.hpp>
#include <grtx/intersect.hpp>
#include <grtx/kbuffer.hpp>
#include <grtx/math.hpp>
#include <grtx/mesh.hpp>
#include <grtx/metrics.hpp>
#include <grtx/ply.hpp>
#include <grtx/render.hpp>
#include <grtx/report.hpp>
#include <grtx/scene.hpp>
#include <grtx/traversal.hpp>
