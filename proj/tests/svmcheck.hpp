#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mvsel/downstream.hpp"

namespace svmcheck {

using mvsel::Index;
using mvsel::Matrix;

// Largest KKT violation over all sub-models and training rows, with the
// decision function rebuilt from scratch from the dual solution.
inline double kkt_violation(const mvsel::SvmModel& m, const Matrix& x, const std::vector<int>& /*labels*/) {
  double worst = 0;
  for (const auto& s : m.submodels) {
    const Index n = x.rows();
    std::vector<double> f(static_cast<std::size_t>(n), s.bias);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (s.alpha(j) > 0)
          f[static_cast<std::size_t>(i)] +=
              s.alpha(j) * s.y[static_cast<std::size_t>(j)] * std::exp(-m.gamma * (x.row(i) - x.row(j)).squaredNorm());
    for (Index i = 0; i < n; ++i) {
      const double yf = s.y[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
      const double a = s.alpha(i);
      double v = 0;
      if (a <= 0) v = std::max(0.0, 1 - yf);
      else if (a >= m.C) v = std::max(0.0, yf - 1);
      else v = std::abs(yf - 1);
      worst = std::max(worst, v);
    }
  }
  return worst;
}

}  // namespace svmcheck
