#include "sbl/training/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>

#include "sbl/encoders/encoders.hpp"
#include "sbl/numerics/gradcheck.hpp"
#include "sbl/numerics/ops.hpp"
#include "sbl/render/render.hpp"
#include "sbl/shapegen/pointcloud.hpp"
#include "sbl/training/losses.hpp"
#include "sbl/training/trainers.hpp"

namespace sbl::training {

namespace {

using render::DepthImage;
using shapegen::PointCloud;

const encoders::PointEncoderConfig kPoint{{12, 16}, {10}, 6};
const encoders::ImageEncoderConfig kImage{16, 16, 8, 8, {12}, 6};

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

// Linear read-out to a scalar so non-scalar ops can be checked.
Var project(const Var& y, const Tensor& w) {
  const Var flat = y.shape().size() == 1 ? reshape(y, {1, y.shape()[0]}) : y;
  return sum(affine(flat, Var::constant(w), Var::constant(Tensor({1}, 0.0))));
}

std::vector<Var> parameter_vars(std::initializer_list<const ParameterSet*> sets) {
  std::vector<Var> out;
  for (const auto* s : sets)
    for (const auto& p : s->items()) out.push_back(p.var);
  return out;
}

struct Inputs {
  std::vector<PointCloud> clouds;
  std::vector<DepthImage> images;
};

// A few real shapes with rendered views, so encoder checks see realistic inputs.
Inputs shape_inputs(std::size_t count, Rng& rng) {
  const auto recipes = shapegen::builtin_recipes();
  Inputs in;
  render::RenderSettings rs;
  rs.width = kImage.width;
  rs.height = kImage.height;
  rs.render_points = 256;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& recipe = recipes[uniform_index(rng, 0, recipes.size() - 1)];
    const auto inst = shapegen::realize_instance(recipe, static_cast<int>(k), rng());
    in.clouds.push_back(shapegen::sample_surface_points(inst, 24, rng));
    in.images.push_back(render::render_views(inst, 1, rs, rng).front());
  }
  return in;
}

template <class T>
std::vector<const T*> pointers(const std::vector<T>& items) {
  std::vector<const T*> out;
  for (const auto& i : items) out.push_back(&i);
  return out;
}

using Instance = std::function<GradCheckReport(Rng&)>;

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed, int instantiations,
                                               double tolerance) {
  const auto check = [](const std::function<Var()>& f, const std::vector<Var>& points) {
    return grad_check(f, points);
  };
  std::vector<std::pair<std::string, Instance>> cases;

  cases.emplace_back("affine", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({4, 3}, rng));
    const Var W = Var::leaf(random_tensor({3, 5}, rng));
    const Var b = Var::leaf(random_tensor({5}, rng));
    const Tensor w = random_tensor({5, 1}, rng);
    return check([=] { return project(affine(x, W, b), w); }, {x, W, b});
  });
  cases.emplace_back("relu", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({5, 4}, rng));
    const Tensor w = random_tensor({4, 1}, rng);
    return check([=] { return project(relu(x), w); }, {x});
  });
  cases.emplace_back("set_max_pool", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({7, 4}, rng));
    const Tensor w = random_tensor({4, 1}, rng);
    return check([=] { return project(set_max_pool(x), w); }, {x});
  });
  cases.emplace_back("segment_max_pool", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({9, 3}, rng));
    const std::vector<std::size_t> offsets{0, 2, 6, 9};
    const Tensor w = random_tensor({3, 1}, rng);
    return check([=] { return project(segment_max_pool(x, offsets), w); }, {x});
  });
  cases.emplace_back("l2_normalize", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({3, 4}, rng));
    const Tensor w = random_tensor({4, 1}, rng);
    return check([=] { return project(l2_normalize(x), w); }, {x});
  });
  cases.emplace_back("softmax_cross_entropy", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({6, 4}, rng, -3.0, 3.0));
    std::vector<int> labels(6);
    for (auto& l : labels) l = static_cast<int>(uniform_index(rng, 0, 3));
    return check([=] { return softmax_cross_entropy(x, labels); }, {x});
  });
  cases.emplace_back("reshape", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({2, 6}, rng));
    const Tensor w = random_tensor({4, 1}, rng);
    return check([=] { return project(reshape(x, {3, 4}), w); }, {x});
  });
  cases.emplace_back("gather_rows", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({4, 3}, rng));
    std::vector<std::size_t> rows(6);
    for (auto& r : rows) r = uniform_index(rng, 0, 3);
    const Tensor w = random_tensor({3, 1}, rng);
    return check([=] { return project(gather_rows(x, rows), w); }, {x});
  });
  cases.emplace_back("weighted_sum", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({1}, rng));
    const Var y = Var::leaf(random_tensor({1}, rng));
    const double a = uniform(rng, -2, 2), b = uniform(rng, -2, 2);
    return check([=] { return weighted_sum(sum_squares(x), a, sum_squares(y), b); }, {x, y});
  });
  cases.emplace_back("sum", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({3, 3}, rng));
    return check([=] { return sum(x); }, {x});
  });
  cases.emplace_back("sum_squares", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({3, 3}, rng));
    return check([=] { return sum_squares(x); }, {x});
  });
  cases.emplace_back("loss_align_l1", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({5, 4}, rng));
    const Tensor t = random_tensor({5, 4}, rng);
    return check([=] { return loss_align_l1(x, t); }, {x});
  });
  cases.emplace_back("loss_align_pairwise", [&](Rng& rng) {
    const Var x = Var::leaf(random_tensor({5, 4}, rng));
    const Tensor t = random_tensor({5, 4}, rng);
    return check([=] { return loss_align_pairwise(x, t); }, {x});
  });
  cases.emplace_back("loss_triplet", [&](Rng& rng) {
    const Var a = Var::leaf(random_tensor({5, 4}, rng));
    const Var p = Var::leaf(random_tensor({5, 4}, rng));
    const Var n = Var::leaf(random_tensor({5, 4}, rng));
    const double margin = uniform(rng, 0.0, 1.0);
    return check([=] { return loss_triplet(a, p, n, margin); }, {a, p, n});
  });
  cases.emplace_back("cross_entropy(f_p)", [&](Rng& rng) {
    const Inputs in = shape_inputs(4, rng);
    const encoders::PointEncoder fp(kPoint, rng);
    const encoders::ClassifierHead head(kPoint.embed_dim, 3, rng);
    std::vector<int> labels(4);
    for (auto& l : labels) l = static_cast<int>(uniform_index(rng, 0, 2));
    const auto clouds = pointers(in.clouds);
    return check([&] { return softmax_cross_entropy(head.logits(fp.forward(clouds)), labels); },
                 parameter_vars({&fp.parameters(), &head.parameters()}));
  });
  cases.emplace_back("w1*L1+w2*L2(f_i)", [&](Rng& rng) {
    const Inputs in = shape_inputs(4, rng);
    const encoders::ImageEncoder fi(kImage, rng);
    const Tensor targets = random_tensor({4, kImage.embed_dim}, rng);
    const double w1 = uniform(rng, 0.1, 2.0), w2 = uniform(rng, 0.1, 2.0);
    const auto images = pointers(in.images);
    return check([&] { return loss_align(fi.forward(images), targets, w1, w2); },
                 parameter_vars({&fi.parameters()}));
  });
  cases.emplace_back("triplet(f_i, f_p)", [&](Rng& rng) {
    const Inputs in = shape_inputs(4, rng);
    const encoders::EncoderPair enc(kPoint, kImage, rng);
    const auto negatives = sample_negatives(4, rng);
    const auto images = pointers(in.images);
    const auto clouds = pointers(in.clouds);
    return check(
        [&] {
          const Var p = enc.fp.forward(clouds);
          return loss_triplet(enc.fi.forward(images), p, gather_rows(p, negatives), 0.1);
        },
        parameter_vars({&enc.fi.parameters(), &enc.fp.parameters()}));
  });

  std::vector<GradCheckCase> out;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    GradCheckCase r;
    r.name = cases[c].first;
    for (int k = 0; k < instantiations; ++k) {
      Rng rng = make_rng(seed, {c, static_cast<std::uint64_t>(k)});
      const auto report = cases[c].second(rng);
      r.max_rel_error = std::max(r.max_rel_error, report.max_rel_error);
      r.checked += report.checked;
      r.skipped_kinks += report.skipped_kinks;
      ++r.instantiations;
    }
    r.passed = r.checked > 0 && r.max_rel_error < tolerance;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sbl::training
