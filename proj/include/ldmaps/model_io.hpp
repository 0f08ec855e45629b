#pragma once

#include "ldmaps/landmark_dmap.hpp"
#include "ldmaps/spectral.hpp"

#include <filesystem>
#include <variant>

namespace ldmaps {

using Model = std::variant<DiffusionModel, LandmarkModel>;

/// Model file: a text header line "LDMM <version> <full|landmark>\n" followed
/// by a little-endian binary payload and a trailing FNV-1a 64 checksum of the
/// payload.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

void write_model(const Model& model, std::ostream& os);
Model read_model(std::istream& is);

}  // namespace ldmaps
