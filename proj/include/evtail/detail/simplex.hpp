// detail/simplex.hpp: derivative-free Nelder-Mead minimizer in two
// dimensions. The objective only needs to be evaluable; the caller encodes
// constraints as large finite penalties so the simplex is pushed back into
// the feasible region instead of stalling on infinities.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace evtail::detail {

struct simplex_result {
  std::array<double, 2> x{0.0, 0.0};
  double fx = 0.0;
  int evals = 0;
  bool converged = false;
};

template <class F>
simplex_result nelder_mead2(F&& f, std::array<double, 2> x0, std::array<double, 2> step,
                            double diameter_tol, int max_evals) {
  using point = std::array<double, 2>;
  struct vertex {
    point x;
    double fx;
  };

  auto dist = [](const point& a, const point& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
  };

  simplex_result out;
  auto eval = [&](const point& p) {
    ++out.evals;
    return f(p);
  };

  std::array<vertex, 3> v;
  v[0] = {x0, eval(x0)};
  v[1] = {{x0[0] + step[0], x0[1]}, 0.0};
  v[1].fx = eval(v[1].x);
  v[2] = {{x0[0], x0[1] + step[1]}, 0.0};
  v[2].fx = eval(v[2].x);

  while (out.evals < max_evals) {
    std::sort(v.begin(), v.end(), [](const vertex& a, const vertex& b) { return a.fx < b.fx; });

    double diameter = std::max({dist(v[0].x, v[1].x), dist(v[0].x, v[2].x), dist(v[1].x, v[2].x)});
    if (diameter < diameter_tol) {
      out.x = v[0].x;
      out.fx = v[0].fx;
      out.converged = true;
      return out;
    }

    point centroid{(v[0].x[0] + v[1].x[0]) / 2.0, (v[0].x[1] + v[1].x[1]) / 2.0};
    auto along = [&](double t) {
      return point{centroid[0] + t * (v[2].x[0] - centroid[0]),
                   centroid[1] + t * (v[2].x[1] - centroid[1])};
    };

    point xr = along(-1.0);
    double fr = eval(xr);

    if (fr < v[0].fx) {
      point xe = along(-2.0);
      double fe = eval(xe);
      if (fe < fr) {
        v[2] = {xe, fe};
      } else {
        v[2] = {xr, fr};
      }
    } else if (fr < v[1].fx) {
      v[2] = {xr, fr};
    } else {
      bool shrink = false;
      if (fr < v[2].fx) {
        point xc = along(-0.5);
        double fc = eval(xc);
        if (fc <= fr) {
          v[2] = {xc, fc};
        } else {
          shrink = true;
        }
      } else {
        point xc = along(0.5);
        double fc = eval(xc);
        if (fc < v[2].fx) {
          v[2] = {xc, fc};
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (int i = 1; i < 3; ++i) {
          v[i].x = {v[0].x[0] + 0.5 * (v[i].x[0] - v[0].x[0]),
                    v[0].x[1] + 0.5 * (v[i].x[1] - v[0].x[1])};
          v[i].fx = eval(v[i].x);
        }
      }
    }
  }

  std::sort(v.begin(), v.end(), [](const vertex& a, const vertex& b) { return a.fx < b.fx; });
  out.x = v[0].x;
  out.fx = v[0].fx;
  out.converged = false;
  return out;
}

}  // namespace evtail::detail
