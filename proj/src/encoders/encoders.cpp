#include "sbl/encoders/encoders.hpp"

#include <cmath>

#include "sbl/error.hpp"
#include "sbl/numerics/ops.hpp"

namespace sbl::encoders {

namespace {

void require_widths(const std::vector<std::size_t>& widths, const std::string& what) {
  for (auto w : widths) {
    if (w == 0) fail(ErrorKind::config, what + " widths must be positive");
  }
}

}  // namespace

Linear::Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
               Rng& rng) {
  if (in == 0 || out == 0) fail(ErrorKind::config, "layer " + name + " has a zero width");
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  Tensor w({in, out});
  for (auto& v : w.data()) v = uniform(rng, -bound, bound);
  W_ = params.add(name + ".W", std::move(w));
  b_ = params.add(name + ".b", Tensor({out}, 0.0));
}

Var Linear::operator()(const Var& x) const { return affine(x, W_, b_); }

Tensor pack_clouds(const std::vector<const PointCloud*>& clouds, std::vector<std::size_t>& offsets) {
  if (clouds.empty()) fail(ErrorKind::empty_set, "no point clouds to encode");
  offsets.assign(1, 0);
  for (const auto* pc : clouds) {
    if (pc->points.empty()) fail(ErrorKind::empty_set, "cannot encode an empty point cloud");
    offsets.push_back(offsets.back() + pc->size());
  }
  Tensor rows({offsets.back(), 3});
  auto data = rows.data();
  std::size_t k = 0;
  for (const auto* pc : clouds)
    for (const auto& p : pc->points)
      for (double v : p) data[k++] = v;
  return rows;
}

PointEncoder::PointEncoder(const PointEncoderConfig& config, Rng& rng) : config_(config) {
  if (config.point_widths.empty()) fail(ErrorKind::config, "point encoder needs a per-point layer");
  require_widths(config.point_widths, "point encoder");
  require_widths(config.post_hidden, "point encoder");
  if (config.embed_dim == 0) fail(ErrorKind::config, "embedding dimension must be positive");
  std::size_t in = 3;
  for (std::size_t i = 0; i < config.point_widths.size(); ++i) {
    point_layers_.emplace_back(params_, "fp.point." + std::to_string(i), in, config.point_widths[i], rng);
    in = config.point_widths[i];
  }
  for (std::size_t i = 0; i < config.post_hidden.size(); ++i) {
    post_layers_.emplace_back(params_, "fp.post." + std::to_string(i), in, config.post_hidden[i], rng);
    in = config.post_hidden[i];
  }
  post_layers_.emplace_back(params_, "fp.out", in, config.embed_dim, rng);
}

Var PointEncoder::forward(const std::vector<const PointCloud*>& clouds) const {
  std::vector<std::size_t> offsets;
  Var h = Var::constant(pack_clouds(clouds, offsets));
  for (const auto& layer : point_layers_) h = relu(layer(h));
  h = segment_max_pool(h, offsets);
  for (std::size_t i = 0; i + 1 < post_layers_.size(); ++i) h = relu(post_layers_[i](h));
  return post_layers_.back()(h);
}

Tensor PointEncoder::embed(const std::vector<const PointCloud*>& clouds) const {
  NoGradGuard guard;
  return forward(clouds).value();
}

ImageEncoder::ImageEncoder(const ImageEncoderConfig& config, Rng& rng)
    : config_(config),
      patch_layer_([&]() -> Linear {
        if (config.patch <= 0 || config.width <= 0 || config.height <= 0 ||
            config.width % config.patch != 0 || config.height % config.patch != 0) {
          fail(ErrorKind::config, "image sides " + std::to_string(config.width) + "x" +
                                      std::to_string(config.height) +
                                      " are not divisible by patch size " +
                                      std::to_string(config.patch));
        }
        const auto p = static_cast<std::size_t>(config.patch);
        return Linear(params_, "fi.patch", 2 * p * p, config.patch_width, rng);
      }()) {
  require_widths(config.trunk_hidden, "image encoder");
  if (config.embed_dim == 0) fail(ErrorKind::config, "embedding dimension must be positive");
  std::size_t in = patch_count() * config.patch_width;
  for (std::size_t i = 0; i < config.trunk_hidden.size(); ++i) {
    trunk_layers_.emplace_back(params_, "fi.trunk." + std::to_string(i), in, config.trunk_hidden[i], rng);
    in = config.trunk_hidden[i];
  }
  trunk_layers_.emplace_back(params_, "fi.out", in, config.embed_dim, rng);
}

std::size_t ImageEncoder::patch_count() const {
  return static_cast<std::size_t>(config_.width / config_.patch) *
         static_cast<std::size_t>(config_.height / config_.patch);
}

Tensor ImageEncoder::patch_rows(const std::vector<const DepthImage*>& images) const {
  if (images.empty()) fail(ErrorKind::empty_set, "no images to encode");
  const int p = config_.patch, W = config_.width, H = config_.height;
  const std::size_t per_patch = 2 * static_cast<std::size_t>(p * p);
  const std::size_t plane = static_cast<std::size_t>(W) * H;
  Tensor rows({images.size() * patch_count(), per_patch});
  auto out = rows.data();
  std::size_t k = 0;
  for (const auto* img : images) {
    if (img->width != W || img->height != H) {
      fail(ErrorKind::dimension, "image is " + std::to_string(img->width) + "x" +
                                     std::to_string(img->height) + " but the encoder expects " +
                                     std::to_string(W) + "x" + std::to_string(H));
    }
    const auto ch = img->channels();
    for (int pr = 0; pr < H / p; ++pr) {
      for (int pc = 0; pc < W / p; ++pc) {
        for (std::size_t c = 0; c < 2; ++c)
          for (int r = 0; r < p; ++r)
            for (int q = 0; q < p; ++q)
              out[k++] = ch[c * plane + static_cast<std::size_t>(pr * p + r) * W + pc * p + q];
      }
    }
  }
  return rows;
}

Var ImageEncoder::forward(const std::vector<const DepthImage*>& images) const {
  Var h = relu(patch_layer_(Var::constant(patch_rows(images))));
  h = reshape(h, {images.size(), patch_count() * config_.patch_width});
  for (std::size_t i = 0; i + 1 < trunk_layers_.size(); ++i) h = relu(trunk_layers_[i](h));
  return trunk_layers_.back()(h);
}

Tensor ImageEncoder::embed(const std::vector<const DepthImage*>& images) const {
  NoGradGuard guard;
  return forward(images).value();
}

ClassifierHead::ClassifierHead(std::size_t embed_dim, std::size_t classes, Rng& rng)
    : layer_(params_, "head", embed_dim, classes, rng) {}

EncoderPair::EncoderPair(const PointEncoderConfig& point, const ImageEncoderConfig& image, Rng& rng)
    : fp([&]() -> const PointEncoderConfig& {
        if (point.embed_dim != image.embed_dim) {
          fail(ErrorKind::config, "point and image embedding dimensions differ (" +
                                      std::to_string(point.embed_dim) + " vs " +
                                      std::to_string(image.embed_dim) + ")");
        }
        return point;
      }(), rng),
      fi(image, rng) {}

}  // namespace sbl::encoders
