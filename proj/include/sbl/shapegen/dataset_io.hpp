#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbl/shapegen/pointcloud.hpp"
#include "sbl/shapegen/shapes.hpp"

namespace sbl::shapegen {

/// "PC01", u32 LE count, then xyz as float32 LE.
void write_pointcloud_file(const std::filesystem::path& path, const PointCloud& pc);
PointCloud read_pointcloud_file(const std::filesystem::path& path);

nlohmann::json recipes_to_json(const std::vector<CategoryRecipe>& recipes);
std::vector<CategoryRecipe> recipes_from_json(const nlohmann::json& j);
std::vector<CategoryRecipe> load_recipes(const std::filesystem::path& path);

struct ManifestEntry {
  int instance_id = 0;
  int category_id = 0;
  std::string category_name;
  std::string point_file;                // relative to the dataset root
  std::vector<std::string> image_files;  // relative to the dataset root

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

void write_manifest(const std::filesystem::path& root, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& root);

}  // namespace sbl::shapegen
