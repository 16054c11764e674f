#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sbl/numerics/random.hpp"
#include "sbl/shapegen/pointcloud.hpp"

namespace sbl::render {

using shapegen::PointCloud;

struct CameraPose {
  double azimuth_deg = 0.0;    // [0, 360)
  double elevation_deg = 0.0;  // [-50, 50]

  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

CameraPose sample_camera_pose(Rng& rng);

inline constexpr double kBackgroundDepth = 1e9;

struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth;         // row-major H*W; kBackgroundDepth off-object
  std::vector<std::uint8_t> silhouette;
  CameraPose pose;

  bool foreground(int row, int col) const { return silhouette[row * width + col] != 0; }
  std::size_t foreground_count() const;
  // Stored/encoder layout: channel 0 = depth with background 0, channel 1 =
  // silhouette, each H*W row-major.
  std::vector<float> channels() const;

  friend bool operator==(const DepthImage&, const DepthImage&) = default;
};

/// Orthographic z-buffer render. The camera frame is R_x(elevation) * R_z(azimuth)
/// applied to object coordinates; the view axis is +y, image right is +x and
/// image up is +z. The window [-1.1, 1.1]^2 maps onto the W x H raster and each
/// point is splatted as a disc of `splat_radius` pixels. Foreground depths are
/// min-max normalized to [0, 1] (0 = nearest).
DepthImage render_depth(const PointCloud& pc, const CameraPose& pose, int width, int height,
                        double splat_radius);

struct RenderSettings {
  int width = 32;
  int height = 32;
  double splat_radius = 1.0;
  std::size_t render_points = 1024;  // density of the cloud that gets rasterized
};

/// Samples a dense render cloud for the instance, then renders `n_views`
/// independent poses of it.
std::vector<DepthImage> render_views(const shapegen::ShapeInstance& instance, int n_views,
                                     const RenderSettings& settings, Rng& rng);

/// "IM01", u32 W, u32 H, u32 channels=2, float32 planar channels, then pose
/// (azimuth, elevation) as float32. All little-endian.
void write_image_file(const std::filesystem::path& path, const DepthImage& img);
DepthImage read_image_file(const std::filesystem::path& path);

}  // namespace sbl::render
