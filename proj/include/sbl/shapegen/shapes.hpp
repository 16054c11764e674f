#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sbl/numerics/random.hpp"

namespace sbl::shapegen {

using Vec3 = std::array<double, 3>;

enum class PrimitiveKind { box, sphere, cylinder, cone, torus };

std::string to_string(PrimitiveKind kind);
PrimitiveKind primitive_from_string(const std::string& name);

/// One primitive placed in object coordinates (z is up).
///
/// `size` by kind: box = full extents (x, y, z); sphere = (radius, -, -);
/// cylinder and cone = (radius, height, -), axis along local z, centered;
/// torus = (major radius, tube radius, -), ring in the local xy plane.
/// The part is rotated by `rotation_deg` (applied x, then y, then z) and then
/// moved to `offset`.
struct PartSpec {
  PrimitiveKind kind = PrimitiveKind::sphere;
  Vec3 size{1.0, 0.0, 0.0};
  Vec3 offset{0.0, 0.0, 0.0};
  Vec3 rotation_deg{0.0, 0.0, 0.0};

  friend bool operator==(const PartSpec&, const PartSpec&) = default;
};

/// Half-widths of the uniform ranges an instance draws its variation from.
/// Sizes scale by (1 + u*size_fraction) per part and parameter, offsets shift
/// by u*offset per axis, rotations by u*rotation_deg, and the whole object is
/// stretched by (1 + u*stretch_fraction) per axis, with u ~ U[-1, 1].
struct JitterRanges {
  double size_fraction = 0.0;
  double offset = 0.0;
  double rotation_deg = 0.0;
  double stretch_fraction = 0.0;

  friend bool operator==(const JitterRanges&, const JitterRanges&) = default;
};

struct CategoryRecipe {
  int category_id = 0;
  std::string name;
  std::vector<PartSpec> parts;
  JitterRanges jitter;

  friend bool operator==(const CategoryRecipe&, const CategoryRecipe&) = default;
};

// Throws a config error unless the recipe has parts, positive nominal sizes
// and jitter ranges that keep every extent positive.
void validate(const CategoryRecipe& recipe);

struct ShapeInstance {
  int instance_id = 0;
  int category_id = 0;
  std::vector<PartSpec> parts;  // realized, jitter applied
  std::uint64_t rng_seed = 0;
};

/// Draws one instance. The same (recipe, seed) gives identical parameters.
ShapeInstance realize_instance(const CategoryRecipe& recipe, int instance_id, std::uint64_t seed);

/// The shipped table of 24 pose-canonical categories.
std::vector<CategoryRecipe> builtin_recipes();

struct Dataset {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<CategoryRecipe> recipes;
  std::vector<ShapeInstance> instances;  // grouped by category, recipe order

  const CategoryRecipe& recipe_for(int category_id) const;
};

/// Instance seeds derive from (seed, category_id, index within category).
/// Duplicate category ids are a config error.
Dataset generate_dataset(const std::vector<CategoryRecipe>& recipes, int instances_per_category,
                         std::uint64_t seed, std::string name = "procedural");

}  // namespace sbl::shapegen
