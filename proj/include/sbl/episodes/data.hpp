#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sbl/render/render.hpp"
#include "sbl/shapegen/shapes.hpp"

namespace sbl::episodes {

using render::DepthImage;
using shapegen::PointCloud;

struct InstanceData {
  int instance_id = 0;
  int category_id = 0;
  PointCloud cloud;
  std::vector<DepthImage> views;
};

struct DataSettings {
  std::size_t points = 256;
  int views = 8;
  render::RenderSettings render;
};

/// Paired point clouds and rendered views for every instance, indexed by
/// position. Point clouds are only reachable through cloud(), which counts
/// reads per instance when auditing is on.
class LoadedDataset {
 public:
  LoadedDataset() = default;
  LoadedDataset(std::string name, std::uint64_t seed, std::map<int, std::string> category_names,
                std::vector<InstanceData> instances);
  LoadedDataset(LoadedDataset&&) = default;
  LoadedDataset& operator=(LoadedDataset&&) = default;

  const std::string& name() const { return name_; }
  std::uint64_t seed() const { return seed_; }
  const std::map<int, std::string>& category_names() const { return category_names_; }
  std::size_t size() const { return instances_.size(); }
  int instance_id(std::size_t i) const { return instances_.at(i).instance_id; }
  int category(std::size_t i) const { return instances_.at(i).category_id; }
  const std::vector<DepthImage>& views(std::size_t i) const { return instances_.at(i).views; }
  const PointCloud& cloud(std::size_t i) const;

  void enable_cloud_audit();
  // Reads of each instance's cloud since auditing was enabled.
  std::vector<std::size_t> cloud_reads() const;

 private:
  std::string name_;
  std::uint64_t seed_ = 0;
  std::map<int, std::string> category_names_;
  std::vector<InstanceData> instances_;
  std::unique_ptr<std::atomic<std::size_t>[]> reads_;
};

/// Samples each instance's cloud and renders its views. Instances are
/// independent and seeded from their own rng_seed, so the result does not
/// depend on the thread count. Clouds are rounded to float32, as rendered
/// views already are, so the in-memory dataset equals a save/load round trip.
LoadedDataset materialize(const shapegen::Dataset& ds, const DataSettings& settings);

/// Writes manifest.json, ptcld/<id>.f32 and img/<id>_<view>.f32.
void save_dataset(const std::filesystem::path& root, const LoadedDataset& ds);
LoadedDataset load_dataset(const std::filesystem::path& root);

}  // namespace sbl::episodes
