#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sbl/numerics/parameters.hpp"
#include "sbl/numerics/random.hpp"
#include "sbl/render/render.hpp"
#include "sbl/shapegen/pointcloud.hpp"

namespace sbl::encoders {

using render::DepthImage;
using shapegen::PointCloud;

/// Affine layer registered in a ParameterSet as <name>.W [in x out] and
/// <name>.b [out]. Weights start uniform in +-sqrt(6 / in), biases at zero.
class Linear {
 public:
  Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var operator()(const Var& x) const;
  std::size_t in() const { return W_.shape()[0]; }
  std::size_t out() const { return W_.shape()[1]; }

 private:
  Var W_, b_;
};

struct PointEncoderConfig {
  std::vector<std::size_t> point_widths{64, 128};  // shared per-point MLP after the xyz input
  std::vector<std::size_t> post_hidden{};          // hidden widths between pool and output
  std::size_t embed_dim = 64;
};

/// f_p: shared per-point MLP (relu), set max-pool, then an MLP whose last
/// layer is linear. Parameters are named fp.*.
class PointEncoder {
 public:
  PointEncoder(const PointEncoderConfig& config, Rng& rng);

  /// Differentiable embedding of a batch of clouds, shape [B x d].
  Var forward(const std::vector<const PointCloud*>& clouds) const;
  /// Graph-free embedding for inference, [B x d].
  Tensor embed(const std::vector<const PointCloud*>& clouds) const;

  std::size_t embed_dim() const { return config_.embed_dim; }
  const PointEncoderConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

 private:
  PointEncoderConfig config_;
  ParameterSet params_;
  std::vector<Linear> point_layers_;
  std::vector<Linear> post_layers_;
};

struct ImageEncoderConfig {
  int width = 32;
  int height = 32;
  int patch = 8;
  std::size_t patch_width = 64;                 // shared per-patch affine + relu
  std::vector<std::size_t> trunk_hidden{256};  // relu layers before the output
  std::size_t embed_dim = 64;
};

/// f_i: non-overlapping patches of both image channels, a shared per-patch
/// affine + relu, concatenation, then a trunk MLP with a linear last layer.
/// Parameters are named fi.*.
class ImageEncoder {
 public:
  ImageEncoder(const ImageEncoderConfig& config, Rng& rng);

  /// Rows are patches, image-major: [(B * P) x (2 * patch * patch)].
  Tensor patch_rows(const std::vector<const DepthImage*>& images) const;

  Var forward(const std::vector<const DepthImage*>& images) const;
  Tensor embed(const std::vector<const DepthImage*>& images) const;

  std::size_t embed_dim() const { return config_.embed_dim; }
  std::size_t patch_count() const;
  const ImageEncoderConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

 private:
  ImageEncoderConfig config_;
  ParameterSet params_;
  Linear patch_layer_;
  std::vector<Linear> trunk_layers_;
};

/// Linear classifier d -> C used while training f_p (or the image baseline).
/// Parameters are named head.*.
class ClassifierHead {
 public:
  ClassifierHead(std::size_t embed_dim, std::size_t classes, Rng& rng);
  Var logits(const Var& embeddings) const { return layer_(embeddings); }
  std::size_t classes() const { return layer_.out(); }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

 private:
  ParameterSet params_;
  Linear layer_;
};

/// f_p and f_i built together so their embedding dimensions always agree.
struct EncoderPair {
  EncoderPair(const PointEncoderConfig& point, const ImageEncoderConfig& image, Rng& rng);
  PointEncoder fp;
  ImageEncoder fi;
};

// Packs clouds into [sum N x 3] rows plus set offsets for segment pooling.
Tensor pack_clouds(const std::vector<const PointCloud*>& clouds, std::vector<std::size_t>& offsets);

}  // namespace sbl::encoders
