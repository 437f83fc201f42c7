#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace gfs {

struct GradcheckReport {
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  size_t coords_checked = 0;
  std::string worst_param;
  bool pass() const { return max_rel_err < tolerance; }
};

// Compares reverse-mode gradients against central finite differences in
// 64-bit mode. `run` must execute a fresh forward pass and return the loss;
// `run_with_grads` must additionally leave gradients in each parameter.
// Large tensors are checked on a random coordinate subset.
inline GradcheckReport gradcheck(
    const std::function<double()>& run,
    const std::function<double()>& run_with_grads,
    const std::vector<Param<double>*>& params, double tolerance,
    double step = 1e-5, size_t max_coords_per_param = 64,
    uint64_t seed = 0x67726164) {
  GradcheckReport report;
  report.tolerance = tolerance;
  run_with_grads();
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (const Param<double>* p : params) analytic.push_back(p->grad);
  Rng rng(seed);
  for (size_t i = 0; i < params.size(); ++i) {
    Param<double>& p = *params[i];
    const size_t n = p.value.size();
    std::vector<size_t> coords;
    if (n <= max_coords_per_param) {
      coords.resize(n);
      for (size_t k = 0; k < n; ++k) coords[k] = k;
    } else {
      for (size_t k = 0; k < max_coords_per_param; ++k)
        coords.push_back(rng.below(n));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    for (size_t k : coords) {
      const double saved = p.value.v[k];
      p.value.v[k] = saved + step;
      double up = run();
      p.value.v[k] = saved - step;
      double down = run();
      p.value.v[k] = saved;
      double numeric = (up - down) / (2.0 * step);
      double a = analytic[i].v[k];
      double rel = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-8);
      ++report.coords_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p.name;
      }
    }
  }
  return report;
}

}  // namespace gfs
