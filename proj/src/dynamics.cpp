#include "ergsense/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace ergsense {

Vec ControlAffineModel::search_position(const Vec& x) const {
  const auto& idx = search_indices();
  Vec s(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) s[static_cast<Eigen::Index>(i)] = x[idx[i]];
  return s;
}

void ControlAffineModel::set_search_position(Vec& x, const Vec& s) const {
  const auto& idx = search_indices();
  for (std::size_t i = 0; i < idx.size(); ++i) x[idx[i]] = s[static_cast<Eigen::Index>(i)];
}

DoubleIntegrator::DoubleIntegrator(int v, double u_limit) : v_(v) {
  if (v != 2 && v != 3) throw ConfigError("double integrator supports 2 or 3 dimensions");
  if (!(u_limit > 0.0)) throw ConfigError("control limit must be positive");
  for (int i = 0; i < v; ++i) search_.push_back(i);
  u_min_ = Vec::Constant(v, -u_limit);
  u_max_ = Vec::Constant(v, u_limit);
}

Vec DoubleIntegrator::drift(const Vec& x) const {
  Vec dx = Vec::Zero(2 * v_);
  dx.head(v_) = x.tail(v_);
  return dx;
}

Mat DoubleIntegrator::input_map(const Vec& /*x*/) const {
  Mat h = Mat::Zero(2 * v_, v_);
  h.bottomRows(v_).setIdentity();
  return h;
}

Mat DoubleIntegrator::state_jacobian(const Vec& /*x*/, const Vec& /*u*/) const {
  Mat a = Mat::Zero(2 * v_, 2 * v_);
  a.topRightCorner(v_, v_).setIdentity();
  return a;
}

ModelPtr double_integrator(int v, double u_limit) {
  return std::make_shared<const DoubleIntegrator>(v, u_limit);
}

Vec rk4_step(const ControlAffineModel& model, const Vec& x, const ControlSignal& u, double t,
             double h) {
  const Vec k1 = model.f(x, u(t));
  const Vec k2 = model.f(x + 0.5 * h * k1, u(t + 0.5 * h));
  const Vec k3 = model.f(x + 0.5 * h * k2, u(t + 0.5 * h));
  const Vec k4 = model.f(x + h * k3, u(t + h));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate(const ControlAffineModel& model, const Vec& x0, const ControlSignal& u,
                     double t0, double T, double dt, std::span<const double> breakpoints) {
  if (!(dt > 0.0)) throw ConfigError("integration step must be positive");
  if (!(T >= dt * (1.0 - 1e-9))) throw ConfigError("integration horizon shorter than one step");
  if (x0.size() != model.state_dim()) throw ConfigError("initial state has wrong dimension");

  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
  std::sort(cuts.begin(), cuts.end());

  Trajectory traj;
  traj.step = dt;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.controls.reserve(steps + 1);

  Vec x = x0;
  traj.push_back(t0, x, u(t0));
  auto cut = cuts.begin();
  for (std::size_t j = 0; j < steps; ++j) {
    const double ta = t0 + static_cast<double>(j) * dt;
    const double tb = t0 + static_cast<double>(j + 1) * dt;
    while (cut != cuts.end() && *cut < ta) ++cut;
    // A step touching a switch is integrated piecewise; each piece holds the
    // control sampled at its midpoint, which assumes piecewise-constant input.
    if (cut != cuts.end() && *cut <= tb) {
      double t = ta;
      auto next = cut;
      while (t < tb) {
        while (next != cuts.end() && *next <= t) ++next;
        const double te = (next != cuts.end() && *next < tb) ? *next : tb;
        const Vec held = u(0.5 * (t + te));
        x = rk4_step(model, x, [&held](double) { return held; }, t, te - t);
        t = te;
      }
    } else {
      x = rk4_step(model, x, u, ta, dt);
    }
    if (!x.allFinite()) throw NumericError("state became non-finite during integration");
    traj.push_back(tb, x, u(tb));
  }
  return traj;
}

Jacobians jacobians(const ControlAffineModel& model, const Vec& x, const Vec& u) {
  return {model.state_jacobian(x, u), model.control_jacobian(x, u)};
}

}  // namespace ergsense
