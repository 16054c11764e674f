#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "sbl/numerics/random.hpp"
#include "sbl/shapegen/shapes.hpp"

namespace sbl::shapegen {

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

/// Surface area of one part, in closed form.
double surface_area(const PartSpec& part);

/// Area-weighted uniform samples over the union of part surfaces, in object
/// coordinates (no normalization). Interior points of overlapping parts are kept.
PointCloud sample_surface_raw(const std::vector<PartSpec>& parts, std::size_t n, Rng& rng);

/// Centers on the centroid and scales the farthest point to radius 1.
PointCloud normalize(PointCloud pc);

/// sample_surface_raw followed by normalize. n must be at least 8.
PointCloud sample_surface_points(const ShapeInstance& instance, std::size_t n, Rng& rng);

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation_xyz_deg(const Vec3& angles);
Vec3 rotate(const Mat3& m, const Vec3& v);

/// Uniform random rotation: unit quaternion from four standard normals.
Mat3 random_rotation(Rng& rng);

struct AugmentPolicy {
  bool so3_rotation = false;
  double translation_range = 0.0;     // per-axis shift ~ U[-range, range]
  double jitter_sigma = 0.0;          // Gaussian noise, clipped at 3 sigma
  double dropout_max_fraction = 0.0;  // in [0, 1)

  static AugmentPolicy none() { return {}; }
  // Training defaults for the shape embedding.
  static AugmentPolicy training_default();
};

/// Rotate, translate, jitter, then drop k ~ U{0..floor(N*max_fraction)}
/// points, in that order. At least one point always survives.
PointCloud augment_pointcloud(const PointCloud& pc, const AugmentPolicy& policy, Rng& rng);

}  // namespace sbl::shapegen
