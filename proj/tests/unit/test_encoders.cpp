#include <algorithm>
#include <numeric>
#include <thread>

#include <gtest/gtest.h>

#include "sbl/encoders/encoders.hpp"
#include "sbl/error.hpp"
#include "sbl/numerics/gradcheck.hpp"
#include "sbl/numerics/ops.hpp"
#include "sbl/shapegen/shapes.hpp"

using namespace sbl;
using namespace sbl::encoders;

namespace {

std::vector<Var> vars_of(const ParameterSet& params) {
  std::vector<Var> out;
  for (const auto& p : params.items()) out.push_back(p.var);
  return out;
}

PointCloud sample_cloud(int recipe, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto inst = shapegen::realize_instance(shapegen::builtin_recipes()[recipe], 0, seed);
  return shapegen::sample_surface_points(inst, n, rng);
}

DepthImage sample_image(int recipe, int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  const PointCloud pc = sample_cloud(recipe, 512, seed);
  return render::render_depth(pc, render::sample_camera_pose(rng), w, h, 1.0);
}

DepthImage blank_image(int w, int h) {
  DepthImage img;
  img.width = w;
  img.height = h;
  img.depth.assign(static_cast<std::size_t>(w) * h, render::kBackgroundDepth);
  img.silhouette.assign(img.depth.size(), 0);
  return img;
}

}  // namespace

TEST(PointEncoder, PermutationInvariantBitwise) {
  Rng rng(1);
  const PointEncoder fp({}, rng);
  const PointCloud pc = sample_cloud(3, 256, 2);
  const Tensor base = fp.embed({&pc});
  ASSERT_EQ(base.shape(), (Shape{1, 64}));
  std::vector<std::size_t> order(pc.size());
  std::iota(order.begin(), order.end(), 0);
  for (int k = 0; k < 100; ++k) {
    std::shuffle(order.begin(), order.end(), rng);
    PointCloud permuted;
    for (auto i : order) permuted.points.push_back(pc.points[i]);
    EXPECT_EQ(fp.embed({&permuted}), base);
  }
}

TEST(PointEncoder, ZeroOutputLayerGivesZeroEmbedding) {
  Rng rng(2);
  PointEncoder fp({}, rng);
  for (auto& p : fp.parameters().items()) {
    if (p.name.rfind("fp.out.", 0) == 0) p.var.mutable_value().fill(0.0);
  }
  const PointCloud a = sample_cloud(0, 64, 1), b = sample_cloud(9, 100, 2);
  const Tensor e = fp.embed({&a, &b});
  for (double v : e.values()) EXPECT_EQ(v, 0.0);
}

TEST(PointEncoder, BatchMatchesSingleEmbeddings) {
  Rng rng(3);
  const PointEncoder fp({}, rng);
  const PointCloud a = sample_cloud(1, 128, 1), b = sample_cloud(2, 77, 2);
  const Tensor both = fp.embed({&a, &b});
  const Tensor ea = fp.embed({&a}), eb = fp.embed({&b});
  for (std::size_t c = 0; c < 64; ++c) {
    EXPECT_EQ(both.at(0, c), ea.at(0, c));
    EXPECT_EQ(both.at(1, c), eb.at(0, c));
  }
}

TEST(PointEncoder, ParameterNamesAndWidthErrors) {
  Rng rng(4);
  const PointEncoder fp({{16, 32}, {24}, 8}, rng);
  std::vector<std::string> names;
  for (const auto& p : fp.parameters().items()) names.push_back(p.name);
  EXPECT_EQ(names, (std::vector<std::string>{"fp.point.0.W", "fp.point.0.b", "fp.point.1.W",
                                             "fp.point.1.b", "fp.post.0.W", "fp.post.0.b",
                                             "fp.out.W", "fp.out.b"}));
  EXPECT_EQ(fp.parameters().find("fp.point.0.W")->var.shape(), (Shape{3, 16}));
  EXPECT_THROW(PointEncoder({{}, {}, 8}, rng), Error);
  EXPECT_THROW(PointEncoder({{16, 0}, {}, 8}, rng), Error);
  EXPECT_THROW(PointEncoder({{16}, {}, 0}, rng), Error);
}

TEST(PointEncoder, GradientCheckOnSquaredNorm) {
  Rng rng(5);
  const PointEncoder fp({{6, 8}, {5}, 4}, rng);
  const PointCloud a = sample_cloud(4, 12, 1), b = sample_cloud(6, 9, 2);
  const auto report = grad_check([&] { return sum_squares(fp.forward({&a, &b})); },
                                 vars_of(fp.parameters()));
  EXPECT_LT(report.max_rel_error, 1e-4);
  EXPECT_GT(report.checked, 0u);
}

TEST(ImageEncoder, BlankImageWithZeroBiasesGivesZeroEmbedding) {
  Rng rng(6);
  const ImageEncoder fi({}, rng);
  const DepthImage img = blank_image(32, 32);
  const Tensor e = fi.embed({&img});
  ASSERT_EQ(e.shape(), (Shape{1, 64}));
  for (double v : e.values()) EXPECT_EQ(v, 0.0);
}

TEST(ImageEncoder, OutputDimensionForValidSizes) {
  Rng rng(7);
  for (auto [w, h] : {std::pair{32, 32}, {16, 32}, {24, 8}, {8, 8}}) {
    ImageEncoderConfig cfg;
    cfg.width = w;
    cfg.height = h;
    cfg.embed_dim = 12;
    const ImageEncoder fi(cfg, rng);
    const DepthImage img = sample_image(2, w, h, 3);
    EXPECT_EQ(fi.embed({&img, &img}).shape(), (Shape{2, 12}));
  }
}

TEST(ImageEncoder, IndivisibleSizeIsConfigError) {
  Rng rng(8);
  ImageEncoderConfig cfg;
  cfg.width = 30;
  try {
    ImageEncoder fi(cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(ImageEncoder, PatchRowsFollowChannelPlanarLayout) {
  Rng rng(9);
  ImageEncoderConfig cfg;
  cfg.width = 16;
  cfg.height = 8;
  const ImageEncoder fi(cfg, rng);
  DepthImage img = blank_image(16, 8);
  // One foreground pixel in the second patch (columns 8..15), row 2, column 9.
  img.silhouette[2 * 16 + 9] = 1;
  img.depth[2 * 16 + 9] = 0.25;
  const Tensor rows = fi.patch_rows({&img});
  ASSERT_EQ(rows.shape(), (Shape{2, 128}));
  for (std::size_t c = 0; c < 128; ++c) {
    EXPECT_EQ(rows.at(0, c), 0.0);
    const double expected = c == 2 * 8 + 1 ? 0.25 : c == 64 + 2 * 8 + 1 ? 1.0 : 0.0;
    EXPECT_EQ(rows.at(1, c), expected) << c;
  }
}

TEST(ImageEncoder, GradientCheckOnSquaredNorm) {
  Rng rng(10);
  ImageEncoderConfig cfg{16, 16, 8, 6, {7}, 5};
  const ImageEncoder fi(cfg, rng);
  const DepthImage a = sample_image(5, 16, 16, 1), b = sample_image(11, 16, 16, 2);
  const auto report = grad_check([&] { return sum_squares(fi.forward({&a, &b})); },
                                 vars_of(fi.parameters()));
  EXPECT_LT(report.max_rel_error, 1e-4);
  EXPECT_GT(report.checked, 0u);
}

TEST(ImageEncoder, ConcurrentInferenceMatchesSerial) {
  Rng rng(11);
  const ImageEncoder fi({}, rng);
  std::vector<DepthImage> images;
  for (int i = 0; i < 8; ++i) images.push_back(sample_image(i, 32, 32, i));
  std::vector<Tensor> serial, threaded(images.size());
  for (const auto& img : images) serial.push_back(fi.embed({&img}));
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < images.size(); ++i) {
    pool.emplace_back([&, i] { threaded[i] = fi.embed({&images[i]}); });
  }
  for (auto& t : pool) t.join();
  EXPECT_EQ(threaded, serial);
}

TEST(EncoderPair, DimensionsMustAgree) {
  Rng rng(12);
  PointEncoderConfig p;
  ImageEncoderConfig i;
  i.embed_dim = 32;
  EXPECT_THROW(EncoderPair(p, i, rng), Error);
  i.embed_dim = 64;
  const EncoderPair pair(p, i, rng);
  EXPECT_EQ(pair.fp.embed_dim(), pair.fi.embed_dim());
}

TEST(ClassifierHead, ZeroEmbeddingGivesUniformLogits) {
  Rng rng(13);
  const ClassifierHead head(4, 3, rng);
  const Tensor logits = head.logits(Var::constant(Tensor({1, 4}, 0.0))).value();
  for (double v : logits.values()) EXPECT_EQ(v, 0.0);
}

TEST(ClassifierHead, SingleFeatureToyRanksBySign) {
  Rng rng(14);
  ClassifierHead head(1, 2, rng);
  head.parameters().items()[0].var.mutable_value() = Tensor({1, 2}, {1.0, -1.0});
  const Tensor logits = head.logits(Var::constant(Tensor({2, 1}, {0.5, -2.0}))).value();
  EXPECT_GT(logits.at(0, 0), logits.at(0, 1));
  EXPECT_LT(logits.at(1, 0), logits.at(1, 1));
}

TEST(ClassifierHead, SharedBiasShiftKeepsArgmax) {
  Rng rng(15);
  ClassifierHead head(6, 5, rng);
  std::mt19937_64 g(1);
  Tensor x({10, 6});
  for (auto& v : x.data()) v = std::uniform_real_distribution<double>(-1, 1)(g);
  const Tensor before = head.logits(Var::constant(x)).value();
  for (auto& v : head.parameters().find("head.b")->var.node()->value.data()) v += 3.5;
  const Tensor after = head.logits(Var::constant(x)).value();
  for (std::size_t r = 0; r < 10; ++r) {
    std::size_t ab = 0, aa = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_NEAR(after.at(r, c), before.at(r, c) + 3.5, 1e-12);
      if (before.at(r, c) > before.at(r, ab)) ab = c;
      if (after.at(r, c) > after.at(r, aa)) aa = c;
    }
    EXPECT_EQ(aa, ab);
  }
}
