#pragma once

#include "ergsense/domain.hpp"
#include "ergsense/dynamics.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace ergsense {

struct ErgodicControllerConfig {
  double horizon = 0.5;
  double dt = 0.01;
  double q = 1.0;
  /// Control weight; empty means 0.01 * I.
  Mat R;
  double alpha_d = -20.0;
  /// Default control, held constant over the horizon; empty means zero.
  Vec u_def;
  /// Trailing history folded into c_k. Infinity keeps the whole history.
  double history_window = std::numeric_limits<double>::infinity();
  /// First line-search duration as a fraction of the horizon.
  double lambda_init_fraction = 0.25;
  double lambda_shrink = 0.5;
  int max_line_search = 30;
  double lambda_min = 0.01;

  Mat control_weight(int m) const;
  Vec default_control(int m) const;
  /// Throws ConfigError when an invariant is broken.
  void validate(int m) const;
};

/// u_star applied from tau for lambda seconds.
struct ControlAction {
  Vec u_star;
  double tau = 0.0;
  double lambda = 0.0;
  /// Horizon metric under the default control and with the action applied.
  double metric_default = 0.0;
  double metric_applied = 0.0;
  /// Mode insertion gradient at tau (with the unsaturated control).
  double mode_insertion_gradient = 0.0;
  bool descent = false;

  bool active_at(double t) const { return t >= tau && t < tau + lambda; }
};

/// Running time integrals of F_k over the recorded search-space history,
/// stored as prefix sums so any trailing window costs O(K^v).
class HistoryCoefficients {
 public:
  explicit HistoryCoefficients(BasisPtr basis);

  /// Appends the position occupied from `t` until the next sample. Times
  /// must strictly increase. Positions are clamped into the domain.
  void append(double t, const Vec& s);

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  double last_time() const { return times_.back(); }

  struct Window {
    Vec integral;
    double duration = 0.0;
  };

  /// Integral of F_k over samples with t_j >= until - window, the last one
  /// extending to `until`.
  Window window_integral(double until, double window) const;

 private:
  BasisPtr basis_;
  std::vector<double> times_;
  std::vector<double> prefix_;  // row m = integral over samples [0, m)
  Vec last_f_;
};

/// Open-loop rollout under the constant default control.
Trajectory simulate_forward(const ControlAffineModel& model, const Vec& x_i, double t_i,
                            double T, double dt, const Vec& u_def);

/// c_k over the trailing `window` seconds of `history` followed by the
/// predicted horizon, normalized by the combined duration. History samples
/// at or after the prediction start are ignored; the last retained history
/// sample lasts until the prediction starts. The prediction is averaged
/// with the trapezoid rule and its positions are clamped into the domain.
struct BlendedCoefficients {
  SpectralCoefficients coeffs;
  double duration = 0.0;
};

BlendedCoefficients blended_coefficients(const BasisPtr& basis,
                                         const std::vector<int>& search_indices,
                                         const Trajectory& history, const Trajectory& predicted,
                                         double window);

/// Costate of
///   rho' = -(2q/T) sum_k Lambda_k (c_k - phi_k) dF_k/dx - (df/dx)^T rho,
/// rho(end) = 0, sampled at the predicted times. Solved as the discrete
/// adjoint of the trapezoid-averaged metric, so rho_j^T (f2 - f1) is the
/// sensitivity of the sampled metric to an insertion at t_j. `duration` is the T that
/// normalizes c_k.
std::vector<Vec> adjoint_backward(const ControlAffineModel& model, const Trajectory& predicted,
                                  const SpectralCoefficients& coeffs,
                                  const TargetDistribution& target, double q, double duration);

/// Receding-horizon single-action ergodic controller.
class ErgodicController {
 public:
  ErgodicController(ModelPtr model, BasisPtr basis, ErgodicControllerConfig config);

  void record(double t, const Vec& x);
  ControlAction plan(const Vec& x_i, double t_i, const TargetDistribution& target) const;

  /// Ergodic metric of history + horizon when `action` (if any) replaces the
  /// default control inside its window.
  double horizon_metric(const Vec& x_i, double t_i, const TargetDistribution& target,
                        const std::optional<ControlAction>& action) const;

  /// The rollout used by horizon_metric.
  Trajectory rollout(const Vec& x_i, double t_i, const std::optional<ControlAction>& action) const;

  /// c_k of history + a rollout starting at t_i.
  BlendedCoefficients blend(const Trajectory& predicted, double t_i) const;

  const ErgodicControllerConfig& config() const { return config_; }
  const ControlAffineModel& model() const { return *model_; }
  const BasisPtr& basis() const { return basis_; }
  const HistoryCoefficients& history() const { return history_; }

 private:
  ModelPtr model_;
  BasisPtr basis_;
  ErgodicControllerConfig config_;
  HistoryCoefficients history_;
};

/// Stateless form: builds the history integrals from `history` and plans.
ControlAction compute_action(const ModelPtr& model, const BasisPtr& basis,
                             const ErgodicControllerConfig& config, const Vec& x_i, double t_i,
                             const Trajectory& history, const TargetDistribution& target);

}  // namespace ergsense
