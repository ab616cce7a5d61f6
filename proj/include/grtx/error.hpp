// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace grtx {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (bad header, missing field, wrong type).
struct FormatError : Error { using Error::Error; };

// Structurally valid input with unusable values (NaN, degenerate scale).
struct DataError : Error { using Error::Error; };

// Array length / dimension mismatch.
struct ShapeError : Error { using Error::Error; };

// Geometry too ill-conditioned to evaluate.
struct DegenerateGeometryError : Error { using Error::Error; };

// Fixed-capacity buffer exceeded where no fallback exists.
struct CapacityError : Error { using Error::Error; };

// Malformed acceleration structure detected during traversal.
struct TraversalError : Error { using Error::Error; };

// Checkpoint refs resolved against a different structure than the one that
// produced them.
struct StructureMismatchError : Error { using Error::Error; };

struct IoError : Error { using Error::Error; };

}  // namespace grtx
