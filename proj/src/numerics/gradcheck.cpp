#include "sbl/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "sbl/error.hpp"

namespace sbl {

namespace {

struct Probe {
  double value;
  std::uint64_t pattern;
};

Probe evaluate(const std::function<Var()>& f) {
  NoGradGuard no_grad;
  KinkRecorder recorder;
  const Var y = f();
  if (y.value().numel() != 1) {
    fail(ErrorKind::dimension, "grad_check needs a scalar function, got " + y.value().shape_str());
  }
  const double v = y.value()[0];
  if (!std::isfinite(v)) fail(ErrorKind::numeric, "function is not finite at a probe point");
  return {v, recorder.fingerprint()};
}

}  // namespace

GradCheckReport grad_check(const std::function<Var()>& f, const std::vector<Var>& points,
                           double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    fail(ErrorKind::config, "grad_check eps must lie in [1e-6, 1e-3]");
  }
  for (const auto& p : points) {
    if (!p.requires_grad()) fail(ErrorKind::config, "grad_check points must be leaf variables");
    p.zero_grad();
  }

  std::uint64_t base_pattern = 0;
  {
    KinkRecorder recorder;
    const Var y = f();
    if (!std::isfinite(y.value()[0])) fail(ErrorKind::numeric, "function is not finite");
    base_pattern = recorder.fingerprint();
    y.backward();
  }

  GradCheckReport report;
  for (const auto& p : points) {
    const Tensor analytic = p.grad();
    Var point = p;
    Tensor& value = point.mutable_value();
    for (std::size_t i = 0; i < value.numel(); ++i) {
      const double saved = value[i];
      value[i] = saved + eps;
      const Probe up = evaluate(f);
      value[i] = saved - eps;
      const Probe down = evaluate(f);
      value[i] = saved;

      if (up.pattern != base_pattern || down.pattern != base_pattern) {
        ++report.skipped_kinks;
        continue;
      }
      const double numeric = (up.value - down.value) / (2.0 * eps);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      report.max_rel_error = std::max(report.max_rel_error, err);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace sbl
