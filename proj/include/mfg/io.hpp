#pragma once

#include <string>

#include "mfg/grid.hpp"

namespace mfg {

/// Self-describing binary field file: header (magic, dims, spacing, time
/// axis, run-length encoded mask) followed by row-major float64 slices.
/// Write/read round-trips are bit exact.
void write_field(const std::string& path, const SpaceTimeField& field, bool is_density);
SpaceTimeField read_field(const std::string& path, bool* is_density = nullptr);
DensityField read_density(const std::string& path);

/// CSV export of one or all slices: t, x0[, x1], value.
void write_slice_csv(const std::string& path, const SpaceTimeField& field, int slice = -1);

struct StoredPaths;  // sde.hpp

/// Binary path store: header (magic, dim, n_paths, snapshot times) followed
/// by float64 triplets (path id, time, coordinates) in snapshot-major order,
/// then per-path exit flags and times.
void write_paths(const std::string& path, const StoredPaths& paths);
StoredPaths read_paths(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mfg
