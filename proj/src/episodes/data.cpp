#include "sbl/episodes/data.hpp"

#include "sbl/error.hpp"
#include "sbl/shapegen/dataset_io.hpp"

namespace sbl::episodes {

namespace fs = std::filesystem;

LoadedDataset::LoadedDataset(std::string name, std::uint64_t seed,
                             std::map<int, std::string> category_names,
                             std::vector<InstanceData> instances)
    : name_(std::move(name)),
      seed_(seed),
      category_names_(std::move(category_names)),
      instances_(std::move(instances)) {}

const PointCloud& LoadedDataset::cloud(std::size_t i) const {
  const auto& inst = instances_.at(i);
  if (reads_) reads_[i].fetch_add(1, std::memory_order_relaxed);
  return inst.cloud;
}

void LoadedDataset::enable_cloud_audit() {
  reads_ = std::make_unique<std::atomic<std::size_t>[]>(instances_.size());
  for (std::size_t i = 0; i < instances_.size(); ++i) reads_[i] = 0;
}

std::vector<std::size_t> LoadedDataset::cloud_reads() const {
  std::vector<std::size_t> out(instances_.size(), 0);
  if (reads_) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = reads_[i].load();
  }
  return out;
}

namespace {

void round_to_float(PointCloud& pc) {
  for (auto& p : pc.points)
    for (auto& v : p) v = static_cast<float>(v);
}

std::string point_file(int id) { return "ptcld/" + std::to_string(id) + ".f32"; }
std::string image_file(int id, int view) {
  return "img/" + std::to_string(id) + "_" + std::to_string(view) + ".f32";
}

}  // namespace

LoadedDataset materialize(const shapegen::Dataset& ds, const DataSettings& settings) {
  if (settings.views < 1) fail(ErrorKind::config, "views must be at least 1");
  std::vector<InstanceData> out(ds.instances.size());
  std::map<int, std::string> names;
  for (const auto& r : ds.recipes) names[r.category_id] = r.name;

  const auto n = static_cast<std::ptrdiff_t>(ds.instances.size());
  // Errors cannot leave an OpenMP region, so they are captured per item.
  std::vector<std::string> errors(ds.instances.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& inst = ds.instances[static_cast<std::size_t>(k)];
    try {
      InstanceData d{inst.instance_id, inst.category_id, {}, {}};
      Rng cloud_rng = make_rng(inst.rng_seed, {1});
      d.cloud = shapegen::sample_surface_points(inst, settings.points, cloud_rng);
      round_to_float(d.cloud);
      Rng view_rng = make_rng(inst.rng_seed, {2});
      d.views = render::render_views(inst, settings.views, settings.render, view_rng);
      out[static_cast<std::size_t>(k)] = std::move(d);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(k)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) fail(ErrorKind::config, "dataset generation failed: " + e);
  }
  return LoadedDataset(ds.name, ds.seed, std::move(names), std::move(out));
}

void save_dataset(const fs::path& root, const LoadedDataset& ds) {
  shapegen::Manifest m{ds.name(), ds.seed(), {}};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int id = ds.instance_id(i);
    shapegen::ManifestEntry e{id, ds.category(i), ds.category_names().at(ds.category(i)),
                              point_file(id), {}};
    shapegen::write_pointcloud_file(root / e.point_file, ds.cloud(i));
    for (std::size_t v = 0; v < ds.views(i).size(); ++v) {
      e.image_files.push_back(image_file(id, static_cast<int>(v)));
      render::write_image_file(root / e.image_files.back(), ds.views(i)[v]);
    }
    m.entries.push_back(std::move(e));
  }
  shapegen::write_manifest(root, m);
}

LoadedDataset load_dataset(const fs::path& root) {
  const shapegen::Manifest m = shapegen::read_manifest(root);
  std::map<int, std::string> names;
  std::vector<InstanceData> instances;
  for (const auto& e : m.entries) {
    names[e.category_id] = e.category_name;
    InstanceData d{e.instance_id, e.category_id, shapegen::read_pointcloud_file(root / e.point_file), {}};
    for (const auto& f : e.image_files) d.views.push_back(render::read_image_file(root / f));
    if (d.views.empty()) fail(ErrorKind::format, "instance " + std::to_string(e.instance_id) + " has no images");
    instances.push_back(std::move(d));
  }
  return LoadedDataset(m.name, m.seed, std::move(names), std::move(instances));
}

}  // namespace sbl::episodes
