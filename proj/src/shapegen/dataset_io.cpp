#include "sbl/shapegen/dataset_io.hpp"

#include "sbl/binary_io.hpp"
#include "sbl/error.hpp"

namespace sbl::shapegen {

using nlohmann::json;

void write_pointcloud_file(const std::filesystem::path& path, const PointCloud& pc) {
  ByteWriter out;
  out.magic("PC01");
  out.u32(static_cast<std::uint32_t>(pc.size()));
  for (const auto& p : pc.points)
    for (double v : p) out.f32(static_cast<float>(v));
  write_file(path, out.str());
}

PointCloud read_pointcloud_file(const std::filesystem::path& path) {
  ByteReader in(read_file(path), "point cloud " + path.string());
  in.expect_magic("PC01");
  PointCloud pc;
  pc.points.resize(in.u32());
  for (auto& p : pc.points)
    for (auto& v : p) v = in.f32();
  in.expect_end();
  return pc;
}

namespace {

json vec3(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec3_from(const json& j, const char* key) {
  if (!j.contains(key)) return {0, 0, 0};
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    fail(ErrorKind::config, std::string("recipe field '") + key + "' must be a 3-element array");
  }
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

}  // namespace

json recipes_to_json(const std::vector<CategoryRecipe>& recipes) {
  json out = json::array();
  for (const auto& r : recipes) {
    json parts = json::array();
    for (const auto& p : r.parts) {
      parts.push_back({{"kind", to_string(p.kind)},
                       {"size", vec3(p.size)},
                       {"offset", vec3(p.offset)},
                       {"rotation_deg", vec3(p.rotation_deg)}});
    }
    out.push_back({{"category_id", r.category_id},
                   {"name", r.name},
                   {"parts", parts},
                   {"jitter",
                    {{"size_fraction", r.jitter.size_fraction},
                     {"offset", r.jitter.offset},
                     {"rotation_deg", r.jitter.rotation_deg},
                     {"stretch_fraction", r.jitter.stretch_fraction}}}});
  }
  return out;
}

std::vector<CategoryRecipe> recipes_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorKind::config, "recipes must be a JSON array");
  std::vector<CategoryRecipe> out;
  try {
    for (const auto& r : j) {
      CategoryRecipe rec;
      rec.category_id = r.at("category_id").get<int>();
      rec.name = r.at("name").get<std::string>();
      for (const auto& p : r.at("parts")) {
        rec.parts.push_back({primitive_from_string(p.at("kind").get<std::string>()),
                             vec3_from(p, "size"), vec3_from(p, "offset"),
                             vec3_from(p, "rotation_deg")});
      }
      if (r.contains("jitter")) {
        const auto& jt = r.at("jitter");
        rec.jitter = {jt.value("size_fraction", 0.0), jt.value("offset", 0.0),
                      jt.value("rotation_deg", 0.0), jt.value("stretch_fraction", 0.0)};
      }
      validate(rec);
      out.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("malformed recipe: ") + e.what());
  }
  return out;
}

std::vector<CategoryRecipe> load_recipes(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::path, "recipes file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, "cannot parse " + path.string() + ": " + e.what());
  }
  return recipes_from_json(j);
}

void write_manifest(const std::filesystem::path& root, const Manifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"instance_id", e.instance_id},
                       {"category_id", e.category_id},
                       {"category_name", e.category_name},
                       {"point_file", e.point_file},
                       {"image_files", e.image_files}});
  }
  const json j{{"name", m.name}, {"seed", m.seed}, {"instances", entries}};
  write_file(root / "manifest.json", j.dump(1) + "\n");
}

Manifest read_manifest(const std::filesystem::path& root) {
  const auto path = root / "manifest.json";
  if (!std::filesystem::exists(path)) fail(ErrorKind::path, "no dataset manifest at " + path.string());
  Manifest m;
  try {
    const json j = json::parse(read_file(path));
    m.name = j.at("name").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("instances")) {
      m.entries.push_back({e.at("instance_id").get<int>(), e.at("category_id").get<int>(),
                           e.at("category_name").get<std::string>(),
                           e.at("point_file").get<std::string>(),
                           e.at("image_files").get<std::vector<std::string>>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::format, "malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace sbl::shapegen
