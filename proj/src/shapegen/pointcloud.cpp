#include "sbl/shapegen/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sbl/error.hpp"

namespace sbl::shapegen {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 sample_box(const Vec3& s, Rng& rng) {
  const double hx = s[0] / 2, hy = s[1] / 2, hz = s[2] / 2;
  const double ax = s[1] * s[2], ay = s[0] * s[2], az = s[0] * s[1];
  const double pick = uniform(rng, 0.0, ax + ay + az);
  const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  const double a = uniform(rng, -1.0, 1.0), b = uniform(rng, -1.0, 1.0);
  if (pick < ax) return {side * hx, a * hy, b * hz};
  if (pick < ax + ay) return {a * hx, side * hy, b * hz};
  return {a * hx, b * hy, side * hz};
}

Vec3 sample_sphere(double r, Rng& rng) {
  for (;;) {
    const Vec3 g{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
    const double n = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    if (n > 1e-12) return {r * g[0] / n, r * g[1] / n, r * g[2] / n};
  }
}

Vec3 sample_cylinder(double r, double h, Rng& rng) {
  const double lateral = 2 * kPi * r * h, cap = kPi * r * r;
  const double pick = uniform(rng, 0.0, lateral + 2 * cap);
  const double phi = uniform(rng, 0.0, 2 * kPi);
  if (pick < lateral) {
    return {r * std::cos(phi), r * std::sin(phi), uniform(rng, -h / 2, h / 2)};
  }
  const double rho = r * std::sqrt(uniform(rng, 0.0, 1.0));
  const double z = pick < lateral + cap ? h / 2 : -h / 2;
  return {rho * std::cos(phi), rho * std::sin(phi), z};
}

// Apex at +h/2, base disc of radius r at -h/2.
Vec3 sample_cone(double r, double h, Rng& rng) {
  const double lateral = kPi * r * std::sqrt(r * r + h * h), base = kPi * r * r;
  const double pick = uniform(rng, 0.0, lateral + base);
  const double phi = uniform(rng, 0.0, 2 * kPi);
  const double t = std::sqrt(uniform(rng, 0.0, 1.0));
  if (pick < lateral) {
    return {r * t * std::cos(phi), r * t * std::sin(phi), h / 2 - t * h};
  }
  return {r * t * std::cos(phi), r * t * std::sin(phi), -h / 2};
}

Vec3 sample_torus(double major, double tube, Rng& rng) {
  const double phi = uniform(rng, 0.0, 2 * kPi);
  double theta;
  do {
    theta = uniform(rng, 0.0, 2 * kPi);
  } while (uniform(rng, 0.0, major + tube) > major + tube * std::cos(theta));
  const double ring = major + tube * std::cos(theta);
  return {ring * std::cos(phi), ring * std::sin(phi), tube * std::sin(theta)};
}

Vec3 sample_local(const PartSpec& p, Rng& rng) {
  switch (p.kind) {
    case PrimitiveKind::box: return sample_box(p.size, rng);
    case PrimitiveKind::sphere: return sample_sphere(p.size[0], rng);
    case PrimitiveKind::cylinder: return sample_cylinder(p.size[0], p.size[1], rng);
    case PrimitiveKind::cone: return sample_cone(p.size[0], p.size[1], rng);
    case PrimitiveKind::torus: return sample_torus(p.size[0], p.size[1], rng);
  }
  return {};
}

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

}  // namespace

double surface_area(const PartSpec& p) {
  const auto& s = p.size;
  switch (p.kind) {
    case PrimitiveKind::box: return 2 * (s[0] * s[1] + s[0] * s[2] + s[1] * s[2]);
    case PrimitiveKind::sphere: return 4 * kPi * s[0] * s[0];
    case PrimitiveKind::cylinder: return 2 * kPi * s[0] * s[1] + 2 * kPi * s[0] * s[0];
    case PrimitiveKind::cone:
      return kPi * s[0] * std::sqrt(s[0] * s[0] + s[1] * s[1]) + kPi * s[0] * s[0];
    case PrimitiveKind::torus: return 4 * kPi * kPi * s[0] * s[1];
  }
  return 0.0;
}

Mat3 rotation_xyz_deg(const Vec3& angles) {
  const auto axis = [](int a, double deg) {
    const double r = deg * kPi / 180.0, c = std::cos(r), s = std::sin(r);
    Mat3 m{};
    const int i = (a + 1) % 3, j = (a + 2) % 3;
    m[a][a] = 1;
    m[i][i] = c;
    m[i][j] = -s;
    m[j][i] = s;
    m[j][j] = c;
    return m;
  };
  return multiply(axis(2, angles[2]), multiply(axis(1, angles[1]), axis(0, angles[0])));
}

Vec3 rotate(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

Mat3 random_rotation(Rng& rng) {
  double w, x, y, z, n;
  do {
    w = standard_normal(rng);
    x = standard_normal(rng);
    y = standard_normal(rng);
    z = standard_normal(rng);
    n = std::sqrt(w * w + x * x + y * y + z * z);
  } while (n < 1e-12);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

PointCloud sample_surface_raw(const std::vector<PartSpec>& parts, std::size_t n, Rng& rng) {
  if (parts.empty()) fail(ErrorKind::empty_set, "cannot sample a shape with no parts");
  std::vector<double> cumulative(parts.size());
  std::vector<Mat3> rot(parts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    total += surface_area(parts[i]);
    cumulative[i] = total;
    rot[i] = rotation_xyz_deg(parts[i].rotation_deg);
  }
  PointCloud pc;
  pc.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pick = uniform(rng, 0.0, total);
    std::size_t i = std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin();
    i = std::min(i, parts.size() - 1);
    const Vec3 local = sample_local(parts[i], rng);
    Vec3 p = rotate(rot[i], local);
    for (int a = 0; a < 3; ++a) p[a] += parts[i].offset[a];
    pc.points.push_back(p);
  }
  return pc;
}

PointCloud normalize(PointCloud pc) {
  if (pc.points.empty()) fail(ErrorKind::empty_set, "cannot normalize an empty point cloud");
  Vec3 c{0, 0, 0};
  for (const auto& p : pc.points)
    for (int a = 0; a < 3; ++a) c[a] += p[a];
  for (auto& v : c) v /= static_cast<double>(pc.points.size());
  double r2 = 0.0;
  for (auto& p : pc.points) {
    for (int a = 0; a < 3; ++a) p[a] -= c[a];
    r2 = std::max(r2, p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  }
  if (!(r2 > 0.0)) fail(ErrorKind::degenerate, "point cloud collapses to a single point");
  const double r = std::sqrt(r2);
  for (auto& p : pc.points)
    for (auto& v : p) v /= r;
  return pc;
}

PointCloud sample_surface_points(const ShapeInstance& instance, std::size_t n, Rng& rng) {
  if (n < 8) fail(ErrorKind::config, "point count must be at least 8, got " + std::to_string(n));
  return normalize(sample_surface_raw(instance.parts, n, rng));
}

AugmentPolicy AugmentPolicy::training_default() {
  return {.so3_rotation = false,
          .translation_range = 0.1,
          .jitter_sigma = 0.01,
          .dropout_max_fraction = 0.875};
}

PointCloud augment_pointcloud(const PointCloud& pc, const AugmentPolicy& policy, Rng& rng) {
  if (pc.points.empty()) fail(ErrorKind::empty_set, "cannot augment an empty point cloud");
  if (policy.dropout_max_fraction < 0.0 || policy.dropout_max_fraction >= 1.0) {
    fail(ErrorKind::config, "dropout_max_fraction must lie in [0, 1)");
  }
  PointCloud out = pc;
  if (policy.so3_rotation) {
    const Mat3 r = random_rotation(rng);
    for (auto& p : out.points) p = rotate(r, p);
  }
  if (policy.translation_range > 0.0) {
    Vec3 t;
    for (auto& v : t) v = uniform(rng, -policy.translation_range, policy.translation_range);
    for (auto& p : out.points)
      for (int a = 0; a < 3; ++a) p[a] += t[a];
  }
  if (policy.jitter_sigma > 0.0) {
    const double clip = 3.0 * policy.jitter_sigma;
    for (auto& p : out.points)
      for (auto& v : p) v += std::clamp(policy.jitter_sigma * standard_normal(rng), -clip, clip);
  }
  if (policy.dropout_max_fraction > 0.0) {
    const std::size_t n = out.points.size();
    const auto max_drop = static_cast<std::size_t>(std::floor(n * policy.dropout_max_fraction));
    const std::size_t k = std::min(uniform_index(rng, 0, max_drop), n - 1);
    if (k > 0) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(n - k);
      std::sort(order.begin(), order.end());
      std::vector<Vec3> kept;
      kept.reserve(order.size());
      for (auto i : order) kept.push_back(out.points[i]);
      out.points = std::move(kept);
    }
  }
  return out;
}

}  // namespace sbl::shapegen
