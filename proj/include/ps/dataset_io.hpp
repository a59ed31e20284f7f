#pragma once

#include <filesystem>
#include <iosfwd>

#include "ps/core.hpp"

namespace ps {

/// CSV layout: `day_index,<features...>,y_0..y_{d-1}[,segment_0..]`.
/// Reals are written with 17 significant digits so files round-trip exactly.
void write_dataset_csv(std::ostream& os, const Dataset& data, bool include_segments = true);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, bool include_segments = true);

/// Throws std::runtime_error on malformed input.
Dataset read_dataset_csv(std::istream& is);
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace ps
