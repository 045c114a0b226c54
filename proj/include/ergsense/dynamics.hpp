#pragma once

#include "ergsense/common.hpp"
#include "ergsense/trajectory.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace ergsense {

/// x' = g(x) + h(x) u with box-bounded controls.
class ControlAffineModel {
 public:
  virtual ~ControlAffineModel() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  /// Indices of the state components that live in the search space.
  virtual const std::vector<int>& search_indices() const = 0;

  virtual Vec drift(const Vec& x) const = 0;
  virtual Mat input_map(const Vec& x) const = 0;

  /// df/dx at (x, u).
  virtual Mat state_jacobian(const Vec& x, const Vec& u) const = 0;
  /// df/du at (x, u); for a control-affine model this is h(x).
  Mat control_jacobian(const Vec& x, const Vec& /*u*/) const { return input_map(x); }

  const Vec& u_min() const { return u_min_; }
  const Vec& u_max() const { return u_max_; }

  Vec f(const Vec& x, const Vec& u) const { return drift(x) + input_map(x) * u; }
  Vec saturate(const Vec& u) const { return u.cwiseMax(u_min_).cwiseMin(u_max_); }
  Vec search_position(const Vec& x) const;
  void set_search_position(Vec& x, const Vec& s) const;

 protected:
  Vec u_min_;
  Vec u_max_;
};

using ModelPtr = std::shared_ptr<const ControlAffineModel>;

/// Point mass in R^v: state (position, velocity), control = acceleration.
class DoubleIntegrator final : public ControlAffineModel {
 public:
  DoubleIntegrator(int v, double u_limit);

  int state_dim() const override { return 2 * v_; }
  int control_dim() const override { return v_; }
  const std::vector<int>& search_indices() const override { return search_; }

  Vec drift(const Vec& x) const override;
  Mat input_map(const Vec& x) const override;
  Mat state_jacobian(const Vec& x, const Vec& u) const override;

  int dims() const { return v_; }

 private:
  int v_;
  std::vector<int> search_;
};

inline constexpr double kDefaultControlLimit = 10.0;

/// Throws ConfigError unless v is 2 or 3.
ModelPtr double_integrator(int v, double u_limit = kDefaultControlLimit);

/// Open-loop control as a function of time.
using ControlSignal = std::function<Vec(double)>;

/// One classical RK4 step of length h under `u`.
Vec rk4_step(const ControlAffineModel& model, const Vec& x, const ControlSignal& u, double t,
             double h);

/// Fixed-step RK4 rollout over [t0, t0 + T]. Samples land on the dt grid;
/// `breakpoints` (times where u jumps) split the step that contains them so
/// the integrator never straddles a discontinuity. Throws NumericError on
/// non-finite states.
Trajectory integrate(const ControlAffineModel& model, const Vec& x0, const ControlSignal& u,
                     double t0, double T, double dt,
                     std::span<const double> breakpoints = {});

struct Jacobians {
  Mat dfdx;
  Mat dfdu;
};

Jacobians jacobians(const ControlAffineModel& model, const Vec& x, const Vec& u);

}  // namespace ergsense
