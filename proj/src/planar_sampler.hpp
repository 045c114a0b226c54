#pragma once

#include "ergsense/domain.hpp"

#include <Eigen/Core>

#include <algorithm>

namespace ergsense::detail {

// Bilinear lookups on a planar field without heap traffic. Mirrors
// GridField::interpolate and LikelihoodField::spatial_gradient.
class PlanarSampler {
 public:
  explicit PlanarSampler(const GridField& g)
      : g_(g),
        nx_(g.sizes[0]),
        ny_(g.sizes[1]),
        x0_(g.domain.lower[0]),
        y0_(g.domain.lower[1]),
        hx_(g.spacing(0)),
        hy_(g.spacing(1)),
        x1_(x0_ + g.domain.lengths[0]),
        y1_(y0_ + g.domain.lengths[1]) {}

  bool contains(double x, double y) const {
    constexpr double tol = 1e-12;
    return x >= x0_ - tol && x <= x1_ + tol && y >= y0_ - tol && y <= y1_ + tol;
  }

  double value(double x, double y) const {
    double u = std::clamp((x - x0_) / hx_, 0.0, static_cast<double>(nx_ - 1));
    double v = std::clamp((y - y0_) / hy_, 0.0, static_cast<double>(ny_ - 1));
    int i = std::min(static_cast<int>(u), nx_ - 2);
    int j = std::min(static_cast<int>(v), ny_ - 2);
    const double fu = u - i;
    const double fv = v - j;
    const double* row = g_.values.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + i;
    const double a = (1.0 - fu) * row[0] + fu * row[1];
    const double b = (1.0 - fu) * row[nx_] + fu * row[nx_ + 1];
    return (1.0 - fv) * a + fv * b;
  }

  Eigen::Vector2d gradient(double x, double y) const {
    return {(value(x + hx_, y) - value(x - hx_, y)) / (2.0 * hx_),
            (value(x, y + hy_) - value(x, y - hy_)) / (2.0 * hy_)};
  }

 private:
  const GridField& g_;
  int nx_, ny_;
  double x0_, y0_, hx_, hy_, x1_, y1_;
};

}  // namespace ergsense::detail
