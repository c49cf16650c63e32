#pragma once

#include <filesystem>
#include <string>

#include "qpar/medium.hpp"

namespace qpar {

/// Writes the binary scene dump to `path` and the family config to `path + ".cfg"`.
void write_scene(const std::filesystem::path& path, const MaterialScene& scene);

/// Reads a scene written by write_scene. Structural problems raise Error; the
/// returned scene is not validated.
MaterialScene read_scene(const std::filesystem::path& path);

std::filesystem::path family_config_path(const std::filesystem::path& scene_path);

}  // namespace qpar
