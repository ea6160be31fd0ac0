#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hetermpc/tensor.hpp"

namespace hetermpc {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

/// Compares the tape gradient of scalar `f(x)` with the fourth-order
/// five-point central difference of step `h`, coordinate by coordinate. The
/// error per coordinate is
/// |a - n| / (|a| + |n| + 1e-8). Throws if two evaluations at the same point
/// disagree, since the comparison is meaningless for a non-deterministic f.
template <typename T, typename F>
GradCheckResult finite_diff_check_detailed(F&& f, BasicTensor<T> x, T h) {
  const T first = f(x).item();
  const T second = f(x).item();
  if (first != second) {
    throw std::runtime_error("finite_diff_check: function is not deterministic");
  }

  x.zero_grad();
  f(x).backward();
  std::vector<T> analytic(x.numel(), T(0));
  if (x.has_grad()) {
    const auto g = x.grad();
    std::copy(g.begin(), g.end(), analytic.begin());
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  auto values = x.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T saved = values[i];
    auto at = [&](T offset) {
      values[i] = saved + offset;
      return static_cast<double>(f(x).item());
    };
    const double numeric = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * static_cast<double>(h));
    values[i] = saved;
    const double a = static_cast<double>(analytic[i]);
    const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-8);
    if (err > result.max_rel_error) {
      result = {err, i, a, numeric};
    }
  }
  return result;
}

template <typename T, typename F>
double finite_diff_check(F&& f, BasicTensor<T> x, T h) {
  return finite_diff_check_detailed(std::forward<F>(f), std::move(x), h).max_rel_error;
}

}  // namespace hetermpc
