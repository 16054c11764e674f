#include "sbl/render/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sbl/binary_io.hpp"
#include "sbl/error.hpp"

namespace sbl::render {

CameraPose sample_camera_pose(Rng& rng) {
  // Angles are kept float-exact so that stored images round-trip bitwise.
  double psi = static_cast<float>(uniform(rng, 0.0, 360.0));
  if (psi >= 360.0) psi = 0.0;
  const double elevation = static_cast<float>(uniform(rng, -50.0, 50.0));
  return {psi, elevation};
}

std::size_t DepthImage::foreground_count() const {
  return static_cast<std::size_t>(std::count(silhouette.begin(), silhouette.end(), 1));
}

std::vector<float> DepthImage::channels() const {
  const std::size_t n = depth.size();
  std::vector<float> out(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = silhouette[i] ? static_cast<float>(depth[i]) : 0.0f;
    out[n + i] = static_cast<float>(silhouette[i]);
  }
  return out;
}

DepthImage render_depth(const PointCloud& pc, const CameraPose& pose, int width, int height,
                        double splat_radius) {
  if (pc.points.empty()) fail(ErrorKind::empty_set, "cannot render an empty point cloud");
  if (width < 8 || height < 8) fail(ErrorKind::config, "image sides must be at least 8 pixels");
  if (splat_radius < 0.0) fail(ErrorKind::config, "splat radius must be nonnegative");

  const double deg = std::numbers::pi / 180.0;
  const shapegen::Mat3 view = [&] {
    const double ca = std::cos(pose.azimuth_deg * deg), sa = std::sin(pose.azimuth_deg * deg);
    const double ce = std::cos(pose.elevation_deg * deg), se = std::sin(pose.elevation_deg * deg);
    // R_x(e) * R_z(a)
    return shapegen::Mat3{{{ca, -sa, 0.0}, {ce * sa, ce * ca, -se}, {se * sa, se * ca, ce}}};
  }();

  DepthImage img;
  img.width = width;
  img.height = height;
  img.pose = pose;
  img.depth.assign(static_cast<std::size_t>(width) * height, kBackgroundDepth);
  img.silhouette.assign(img.depth.size(), 0);

  const int reach = static_cast<int>(std::ceil(splat_radius));
  const double r2 = splat_radius * splat_radius;
  for (const auto& p : pc.points) {
    const shapegen::Vec3 c = shapegen::rotate(view, p);
    const int col = static_cast<int>(std::floor((c[0] + 1.1) / 2.2 * width));
    const int row = static_cast<int>(std::floor((1.1 - c[2]) / 2.2 * height));
    for (int dr = -reach; dr <= reach; ++dr) {
      for (int dc = -reach; dc <= reach; ++dc) {
        if (dr * dr + dc * dc > r2) continue;
        const int rr = row + dr, cc = col + dc;
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        double& z = img.depth[static_cast<std::size_t>(rr) * width + cc];
        z = std::min(z, c[1]);
      }
    }
  }

  double lo = kBackgroundDepth, hi = -kBackgroundDepth;
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    if (img.depth[i] < kBackgroundDepth) {
      img.silhouette[i] = 1;
      lo = std::min(lo, img.depth[i]);
      hi = std::max(hi, img.depth[i]);
    }
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    if (img.silhouette[i]) img.depth[i] = static_cast<float>(span > 0.0 ? (img.depth[i] - lo) / span : 0.0);
  }
  return img;
}

std::vector<DepthImage> render_views(const shapegen::ShapeInstance& instance, int n_views,
                                     const RenderSettings& settings, Rng& rng) {
  if (n_views < 1) fail(ErrorKind::config, "n_views must be at least 1");
  const PointCloud cloud = shapegen::sample_surface_points(instance, settings.render_points, rng);
  std::vector<DepthImage> views;
  views.reserve(static_cast<std::size_t>(n_views));
  for (int v = 0; v < n_views; ++v) {
    const CameraPose pose = sample_camera_pose(rng);
    views.push_back(render_depth(cloud, pose, settings.width, settings.height, settings.splat_radius));
  }
  return views;
}

void write_image_file(const std::filesystem::path& path, const DepthImage& img) {
  ByteWriter out;
  out.magic("IM01");
  out.u32(static_cast<std::uint32_t>(img.width));
  out.u32(static_cast<std::uint32_t>(img.height));
  out.u32(2);
  const auto ch = img.channels();
  out.bytes(ch.data(), ch.size() * sizeof(float));
  out.f32(static_cast<float>(img.pose.azimuth_deg));
  out.f32(static_cast<float>(img.pose.elevation_deg));
  write_file(path, out.str());
}

DepthImage read_image_file(const std::filesystem::path& path) {
  ByteReader in(read_file(path), "image " + path.string());
  in.expect_magic("IM01");
  DepthImage img;
  img.width = static_cast<int>(in.u32());
  img.height = static_cast<int>(in.u32());
  if (in.u32() != 2) fail(ErrorKind::format, path.string() + " must have 2 channels");
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<float> ch(2 * n);
  in.take(ch.data(), ch.size() * sizeof(float));
  img.depth.resize(n);
  img.silhouette.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.silhouette[i] = ch[n + i] != 0.0f ? 1 : 0;
    img.depth[i] = img.silhouette[i] ? ch[i] : kBackgroundDepth;
  }
  img.pose.azimuth_deg = in.f32();
  img.pose.elevation_deg = in.f32();
  in.expect_end();
  return img;
}

}  // namespace sbl::render
