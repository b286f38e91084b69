#pragma once

// Internal quasi-Newton maximizer (BFGS with backtracking line search and a
// coordinate box) for the low-dimensional working-model likelihood. Not
// installed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace parfilter::optim {

struct Result {
  std::vector<double> x;
  double value = 0.0;     // objective at x (maximization scale)
  double grad_inf = 0.0;  // projected gradient sup-norm at x
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>, std::vector<double>&)>;

// Sup-norm of the gradient over directions not pinned by the box: a
// coordinate sitting at a bound with the gradient pushing outward is free to
// stay there.
inline double projected_grad_inf(const std::vector<double>& x, const std::vector<double>& g,
                                 double lo, double hi) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= hi - 1e-12 && g[i] > 0.0) continue;
    if (x[i] <= lo + 1e-12 && g[i] < 0.0) continue;
    worst = std::max(worst, std::abs(g[i]));
  }
  return worst;
}

inline Result maximize(const Objective& fn, std::vector<double> x0, double lo, double hi,
                       int max_iterations = 300, double grad_tolerance = 1e-6) {
  const std::size_t dim = x0.size();
  auto clamp_point = [&](std::vector<double>& x) {
    for (double& v : x) v = std::min(std::max(v, lo), hi);
  };
  clamp_point(x0);

  std::vector<double> x = x0, g(dim), g_new(dim);
  double f = fn(x, g);
  // Inverse-Hessian approximation, row-major; starts at identity.
  std::vector<double> h(dim * dim, 0.0);
  auto reset_h = [&] {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < dim; ++i) h[i * dim + i] = 1.0;
  };
  reset_h();

  Result result;
  int stagnant = 0;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    if (projected_grad_inf(x, g, lo, hi) < grad_tolerance) break;
    // Ascent direction d = H g (H approximates the inverse of -Hessian).
    std::vector<double> d(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) d[i] += h[i * dim + j] * g[j];
    }
    double dg = 0.0;
    for (std::size_t i = 0; i < dim; ++i) dg += d[i] * g[i];
    if (!(dg > 0.0)) {  // curvature information went bad; restart from steepest ascent
      reset_h();
      d = g;
    }
    // Backtracking Armijo search on the clamped step. When clamping bends
    // the step so far that the directional derivative is no longer positive,
    // fall back to requiring strict improvement.
    double step = 1.0;
    std::vector<double> x_new(dim), s(dim);
    double f_new = f;
    bool moved = false;
    while (step > 1e-14) {
      double sg = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        x_new[i] = x[i] + step * d[i];
      }
      clamp_point(x_new);
      bool any_move = false;
      for (std::size_t i = 0; i < dim; ++i) {
        s[i] = x_new[i] - x[i];
        sg += s[i] * g[i];
        any_move = any_move || s[i] != 0.0;
      }
      if (any_move) {
        f_new = fn(x_new, g_new);
        const bool accepted = sg > 0.0 ? f_new >= f + 1e-4 * sg : f_new > f;
        if (accepted && f_new > -1e300) {
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) break;  // no usable step remains
    // BFGS update of the inverse Hessian with s and y = -(g_new - g).
    std::vector<double> y(dim);
    double ys = 0.0, ss = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      y[i] = g[i] - g_new[i];
      ys += y[i] * s[i];
      ss += s[i] * s[i];
      yy += y[i] * y[i];
    }
    if (ys > 1e-12 * std::sqrt(ss * yy) && ys > 0.0) {
      const double rho = 1.0 / ys;
      std::vector<double> hy(dim, 0.0);
      for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) hy[i] += h[i * dim + j] * y[j];
      }
      double yhy = 0.0;
      for (std::size_t i = 0; i < dim; ++i) yhy += y[i] * hy[i];
      for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
          h[i * dim + j] += (rho * rho * yhy + rho) * s[i] * s[j] -
                            rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
      }
    }
    if (std::abs(f_new - f) < 1e-14 * (1.0 + std::abs(f))) {
      if (++stagnant >= 3) {
        x = x_new;
        g = g_new;
        f = f_new;
        break;
      }
    } else {
      stagnant = 0;
    }
    x = x_new;
    g = g_new;
    f = f_new;
  }
  result.x = x;
  result.value = f;
  result.grad_inf = projected_grad_inf(x, g, lo, hi);
  result.iterations = iter;
  result.converged = result.grad_inf < grad_tolerance;
  return result;
}

}  // namespace parfilter::optim
