#include "sbl/shapegen/shapes.hpp"

#include <set>

#include "sbl/error.hpp"

namespace sbl::shapegen {

std::string to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::box: return "box";
    case PrimitiveKind::sphere: return "sphere";
    case PrimitiveKind::cylinder: return "cylinder";
    case PrimitiveKind::cone: return "cone";
    case PrimitiveKind::torus: return "torus";
  }
  return "?";
}

PrimitiveKind primitive_from_string(const std::string& name) {
  for (auto k : {PrimitiveKind::box, PrimitiveKind::sphere, PrimitiveKind::cylinder,
                 PrimitiveKind::cone, PrimitiveKind::torus}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::config, "unknown primitive kind '" + name + "'");
}

namespace {

// Number of meaningful entries in PartSpec::size for each kind.
int size_arity(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::box: return 3;
    case PrimitiveKind::sphere: return 1;
    default: return 2;
  }
}

}  // namespace

void validate(const CategoryRecipe& recipe) {
  const std::string who = "recipe '" + recipe.name + "'";
  if (recipe.parts.empty()) fail(ErrorKind::config, who + " has no parts");
  const auto& j = recipe.jitter;
  if (j.size_fraction < 0.0 || j.size_fraction >= 1.0 || j.stretch_fraction < 0.0 ||
      j.stretch_fraction >= 1.0 || j.offset < 0.0 || j.rotation_deg < 0.0) {
    fail(ErrorKind::config, who + " has jitter ranges that can make extents nonpositive");
  }
  for (const auto& p : recipe.parts) {
    for (int i = 0; i < size_arity(p.kind); ++i) {
      if (!(p.size[i] > 0.0)) fail(ErrorKind::config, who + " has a nonpositive part size");
    }
    if (p.kind == PrimitiveKind::torus && !(p.size[1] < p.size[0])) {
      fail(ErrorKind::config, who + " has a torus whose tube radius exceeds its major radius");
    }
  }
}

ShapeInstance realize_instance(const CategoryRecipe& recipe, int instance_id, std::uint64_t seed) {
  Rng rng(seed);
  const auto u = [&rng] { return uniform(rng, -1.0, 1.0); };
  const auto& j = recipe.jitter;
  ShapeInstance inst{instance_id, recipe.category_id, recipe.parts, seed};

  Vec3 stretch;
  for (auto& s : stretch) s = 1.0 + u() * j.stretch_fraction;

  for (auto& p : inst.parts) {
    for (int i = 0; i < size_arity(p.kind); ++i) p.size[i] *= 1.0 + u() * j.size_fraction;
    if (p.kind == PrimitiveKind::torus) p.size[1] = std::min(p.size[1], 0.9 * p.size[0]);
    for (auto& o : p.offset) o += u() * j.offset;
    for (auto& r : p.rotation_deg) r += u() * j.rotation_deg;
    // Axis stretch keeps the object upright; it moves parts apart and scales
    // each part by the mean stretch so primitives stay primitives.
    const double mean = (stretch[0] + stretch[1] + stretch[2]) / 3.0;
    for (int a = 0; a < 3; ++a) p.offset[a] *= stretch[a];
    for (int i = 0; i < size_arity(p.kind); ++i) p.size[i] *= mean;
    if (p.kind == PrimitiveKind::box) {
      for (int a = 0; a < 3; ++a) p.size[a] *= stretch[a] / mean;
    }
  }
  return inst;
}

const CategoryRecipe& Dataset::recipe_for(int category_id) const {
  for (const auto& r : recipes) {
    if (r.category_id == category_id) return r;
  }
  fail(ErrorKind::config, "no recipe for category " + std::to_string(category_id));
}

Dataset generate_dataset(const std::vector<CategoryRecipe>& recipes, int instances_per_category,
                         std::uint64_t seed, std::string name) {
  if (instances_per_category < 1) {
    fail(ErrorKind::config, "instances_per_category must be at least 1");
  }
  std::set<int> ids;
  for (const auto& r : recipes) {
    validate(r);
    if (!ids.insert(r.category_id).second) {
      fail(ErrorKind::config, "duplicate category_id " + std::to_string(r.category_id));
    }
  }
  Dataset ds{std::move(name), seed, recipes, {}};
  ds.instances.reserve(recipes.size() * static_cast<std::size_t>(instances_per_category));
  int next_id = 0;
  for (const auto& r : recipes) {
    for (int i = 0; i < instances_per_category; ++i) {
      const auto s = derive_seed(seed, {static_cast<std::uint64_t>(r.category_id),
                                        static_cast<std::uint64_t>(i)});
      ds.instances.push_back(realize_instance(r, next_id++, s));
    }
  }
  return ds;
}

namespace {

PartSpec box(double sx, double sy, double sz, Vec3 at = {0, 0, 0}, Vec3 rot = {0, 0, 0}) {
  return {PrimitiveKind::box, {sx, sy, sz}, at, rot};
}
PartSpec sphere(double r, Vec3 at = {0, 0, 0}) { return {PrimitiveKind::sphere, {r, 0, 0}, at, {}}; }
PartSpec cylinder(double r, double h, Vec3 at = {0, 0, 0}, Vec3 rot = {0, 0, 0}) {
  return {PrimitiveKind::cylinder, {r, h, 0}, at, rot};
}
PartSpec cone(double r, double h, Vec3 at = {0, 0, 0}, Vec3 rot = {0, 0, 0}) {
  return {PrimitiveKind::cone, {r, h, 0}, at, rot};
}
PartSpec torus(double major, double tube, Vec3 at = {0, 0, 0}, Vec3 rot = {0, 0, 0}) {
  return {PrimitiveKind::torus, {major, tube, 0}, at, rot};
}

}  // namespace

std::vector<CategoryRecipe> builtin_recipes() {
  const JitterRanges j{0.2, 0.05, 6.0, 0.15};
  std::vector<CategoryRecipe> r;
  int id = 0;
  const auto add = [&](std::string name, std::vector<PartSpec> parts,
                       JitterRanges jitter) { r.push_back({id++, std::move(name), std::move(parts), jitter}); };

  add("mug", {cylinder(0.4, 0.8), torus(0.22, 0.05, {0.45, 0, 0}, {90, 0, 0})}, j);
  add("table",
      {box(1.6, 1.0, 0.08, {0, 0, 0.5}), cylinder(0.05, 1.0, {0.7, 0.4, 0}),
       cylinder(0.05, 1.0, {-0.7, 0.4, 0}), cylinder(0.05, 1.0, {0.7, -0.4, 0}),
       cylinder(0.05, 1.0, {-0.7, -0.4, 0})},
      j);
  add("chair",
      {box(0.8, 0.8, 0.08), box(0.8, 0.08, 0.8, {0, -0.36, 0.4}),
       cylinder(0.04, 0.8, {0.35, 0.35, -0.4}), cylinder(0.04, 0.8, {-0.35, 0.35, -0.4}),
       cylinder(0.04, 0.8, {0.35, -0.35, -0.4}), cylinder(0.04, 0.8, {-0.35, -0.35, -0.4})},
      j);
  add("lamp",
      {cone(0.4, 0.4, {0, 0, 0.6}), cylinder(0.03, 1.0), cylinder(0.3, 0.05, {0, 0, -0.5})}, j);
  add("bottle",
      {cylinder(0.3, 1.0), cone(0.3, 0.25, {0, 0, 0.62}), cylinder(0.1, 0.35, {0, 0, 0.85})}, j);
  add("ball", {sphere(0.5)}, {0.2, 0.0, 0.0, 0.0});
  add("ring", {torus(0.5, 0.15)}, {0.2, 0.0, 8.0, 0.1});
  add("bowl", {cone(0.55, 0.5, {0, 0, 0}, {180, 0, 0}), torus(0.55, 0.05, {0, 0, 0.25})}, j);
  add("bed", {box(1.8, 1.0, 0.25), box(0.1, 1.0, 0.7, {0.9, 0, 0.2}),
              box(0.08, 1.0, 0.4, {-0.9, 0, 0.07})},
      j);
  add("car",
      {box(1.6, 0.7, 0.35), box(0.8, 0.6, 0.3, {-0.1, 0, 0.3}),
       torus(0.15, 0.07, {0.5, 0.36, -0.2}, {90, 0, 0}),
       torus(0.15, 0.07, {-0.5, 0.36, -0.2}, {90, 0, 0}),
       torus(0.15, 0.07, {0.5, -0.36, -0.2}, {90, 0, 0}),
       torus(0.15, 0.07, {-0.5, -0.36, -0.2}, {90, 0, 0})},
      j);
  add("airplane",
      {cylinder(0.12, 1.8, {0, 0, 0}, {0, 90, 0}), box(0.4, 1.8, 0.04),
       box(0.2, 0.6, 0.04, {-0.8, 0, 0}), box(0.2, 0.04, 0.3, {-0.8, 0, 0.15})},
      j);
  add("rocket",
      {cylinder(0.2, 1.2), cone(0.2, 0.4, {0, 0, 0.8}), box(0.3, 0.03, 0.3, {0.25, 0, -0.45}),
       box(0.03, 0.3, 0.3, {0, 0.25, -0.45}), box(0.3, 0.03, 0.3, {-0.25, 0, -0.45}),
       box(0.03, 0.3, 0.3, {0, -0.25, -0.45})},
      j);
  add("tree", {cone(0.5, 1.0, {0, 0, 0.3}), cylinder(0.08, 0.4, {0, 0, -0.4})}, j);
  add("mushroom", {cylinder(0.12, 0.5), cone(0.45, 0.25, {0, 0, 0.35})}, j);
  add("dumbbell",
      {sphere(0.3, {0.6, 0, 0}), sphere(0.3, {-0.6, 0, 0}), cylinder(0.06, 1.2, {0, 0, 0}, {0, 90, 0})},
      j);
  add("hammer", {cylinder(0.05, 1.2), box(0.5, 0.15, 0.15, {0, 0, 0.6})}, j);
  add("bookshelf",
      {box(0.05, 0.4, 1.4, {0.5, 0, 0}), box(0.05, 0.4, 1.4, {-0.5, 0, 0}),
       box(1.0, 0.4, 0.05, {0, 0, -0.6}), box(1.0, 0.4, 0.05, {0, 0, 0}),
       box(1.0, 0.4, 0.05, {0, 0, 0.6})},
      j);
  add("sofa",
      {box(1.6, 0.7, 0.3), box(1.6, 0.15, 0.5, {0, -0.3, 0.3}),
       box(0.15, 0.7, 0.35, {0.8, 0, 0.15}), box(0.15, 0.7, 0.35, {-0.8, 0, 0.15})},
      j);
  add("monitor",
      {box(1.2, 0.06, 0.75, {0, 0, 0.35}), cylinder(0.04, 0.3, {0, 0, -0.15}),
       box(0.4, 0.25, 0.03, {0, 0, -0.3})},
      j);
  add("traffic_cone", {cone(0.35, 1.0), box(0.8, 0.8, 0.06, {0, 0, -0.5})}, j);
  add("tire", {torus(0.5, 0.2, {0, 0, 0}, {90, 0, 0})}, {0.2, 0.0, 8.0, 0.1});
  add("snowman",
      {sphere(0.45, {0, 0, -0.4}), sphere(0.33, {0, 0, 0.3}), sphere(0.22, {0, 0, 0.8})}, j);
  add("cube", {box(1.0, 1.0, 1.0)}, {0.0, 0.0, 6.0, 0.2});
  add("pencil", {cylinder(0.06, 1.6), cone(0.06, 0.2, {0, 0, 0.9})}, j);
  return r;
}

}  // namespace sbl::shapegen
