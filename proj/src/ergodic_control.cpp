#include "ergsense/ergodic_control.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace ergsense {

namespace {

// Zeroes gradient components along axes where the clamp into the domain
// was active; the clamped basis is flat there.
Vec clamped_basis_gradient(const Basis& basis, const Vec& s, std::span<const double> weights) {
  const SearchDomain& d = basis.domain();
  const Vec sc = d.clamp(s);
  Vec g = basis.weighted_gradient(sc, weights);
  for (int i = 0; i < d.dims; ++i) {
    if (s[i] < d.lower[static_cast<std::size_t>(i)] ||
        s[i] > d.lower[static_cast<std::size_t>(i)] + d.lengths[static_cast<std::size_t>(i)])
      g[i] = 0.0;
  }
  return g;
}

}  // namespace

Mat ErgodicControllerConfig::control_weight(int m) const {
  if (R.size() == 0) return 0.01 * Mat::Identity(m, m);
  return R;
}

Vec ErgodicControllerConfig::default_control(int m) const {
  if (u_def.size() == 0) return Vec::Zero(m);
  return u_def;
}

void ErgodicControllerConfig::validate(int m) const {
  if (!(horizon > 0.0)) throw ConfigError("controller horizon must be positive");
  if (!(dt > 0.0) || dt > horizon) throw ConfigError("controller step must be in (0, horizon]");
  if (!(q >= 0.0)) throw ConfigError("metric weight q must be nonnegative");
  if (!(alpha_d < 0.0)) throw ConfigError("alpha_d must be negative");
  if (!(history_window >= 0.0)) throw ConfigError("history window must be nonnegative");
  if (!(lambda_shrink > 0.0 && lambda_shrink < 1.0)) throw ConfigError("line-search shrink must be in (0,1)");
  if (!(lambda_min > 0.0)) throw ConfigError("lambda_min must be positive");
  if (!(lambda_init_fraction > 0.0 && lambda_init_fraction <= 1.0))
    throw ConfigError("lambda_init_fraction must be in (0,1]");
  const Mat r = control_weight(m);
  if (r.rows() != m || r.cols() != m) throw ConfigError("R has wrong shape");
  if (!r.isApprox(r.transpose(), 1e-12)) throw ConfigError("R must be symmetric");
  if (Eigen::LLT<Mat>(r).info() != Eigen::Success) throw ConfigError("R must be positive definite");
  if (default_control(m).size() != m) throw ConfigError("u_def has wrong dimension");
}

HistoryCoefficients::HistoryCoefficients(BasisPtr basis) : basis_(std::move(basis)) {
  last_f_ = Vec::Zero(static_cast<Eigen::Index>(basis_->size()));
}

void HistoryCoefficients::append(double t, const Vec& s) {
  const std::size_t nk = basis_->size();
  if (!times_.empty() && !(t > times_.back()))
    throw ConfigError("history times must strictly increase");
  if (times_.empty()) {
    prefix_.assign(nk, 0.0);
  } else {
    const double dt = t - times_.back();
    const std::size_t base = prefix_.size() - nk;
    prefix_.resize(prefix_.size() + nk);
    for (std::size_t k = 0; k < nk; ++k)
      prefix_[base + nk + k] = prefix_[base + k] + dt * last_f_[static_cast<Eigen::Index>(k)];
  }
  times_.push_back(t);
  basis_->evaluate_all(basis_->domain().clamp(s), std::span<double>(last_f_.data(), nk));
}

HistoryCoefficients::Window HistoryCoefficients::window_integral(double until, double window) const {
  const std::size_t nk = basis_->size();
  Window out{Vec::Zero(static_cast<Eigen::Index>(nk)), 0.0};
  if (times_.empty() || !(until > times_.front())) return out;
  if (times_.back() > until) throw ConfigError("history extends past the requested end time");
  const double start = std::isinf(window) ? times_.front() : until - window;
  const auto it = std::lower_bound(times_.begin(), times_.end(), start);
  if (it == times_.end()) return out;
  const auto j0 = static_cast<std::size_t>(it - times_.begin());
  const std::size_t last = times_.size() - 1;
  for (std::size_t k = 0; k < nk; ++k) {
    out.integral[static_cast<Eigen::Index>(k)] = prefix_[last * nk + k] - prefix_[j0 * nk + k] +
                                                 (until - times_[last]) * last_f_[static_cast<Eigen::Index>(k)];
  }
  out.duration = until - times_[j0];
  return out;
}

Trajectory simulate_forward(const ControlAffineModel& model, const Vec& x_i, double t_i,
                            double T, double dt, const Vec& u_def) {
  return integrate(model, x_i, [&u_def](double) { return u_def; }, t_i, T, dt);
}

BlendedCoefficients blended_coefficients(const BasisPtr& basis,
                                         const std::vector<int>& search_indices,
                                         const Trajectory& history, const Trajectory& predicted,
                                         double window) {
  std::vector<Vec> positions;
  std::vector<double> weights;
  const SearchDomain& d = basis->domain();

  if (!history.empty() && !predicted.empty()) {
    const double t_start = predicted.times.front();
    const auto hpos = history.search_positions(search_indices);
    const double from = std::isinf(window) ? -std::numeric_limits<double>::infinity() : t_start - window;
    for (std::size_t j = 0; j < history.size(); ++j) {
      const double tj = history.times[j];
      if (tj >= t_start || tj < from) continue;
      const double next = (j + 1 < history.size() && history.times[j + 1] < t_start) ? history.times[j + 1] : t_start;
      positions.push_back(d.clamp(hpos[j]));
      weights.push_back(next - tj);
    }
  }
  if (!predicted.empty()) {
    const auto ppos = predicted.search_positions(search_indices);
    const auto pw = predicted.trapezoid_weights();
    for (std::size_t j = 0; j < ppos.size(); ++j) {
      positions.push_back(d.clamp(ppos[j]));
      weights.push_back(pw[j]);
    }
  }
  if (positions.empty()) throw DegenerateError("both history and prediction are empty");
  double total = 0.0;
  for (double w : weights) total += w;
  return {time_average_coefficients(basis, positions, weights), total};
}

std::vector<Vec> adjoint_backward(const ControlAffineModel& model, const Trajectory& predicted,
                                  const SpectralCoefficients& coeffs,
                                  const TargetDistribution& target, double q, double duration) {
  if (!coeffs.basis || !target.phi.basis || !coeffs.basis->domain().same_geometry(target.phi.basis->domain()))
    throw ConfigError("coefficients and target use different index sets");
  if (!(duration > 0.0)) throw DegenerateError("adjoint needs a positive normalizing duration");
  const Basis& basis = *coeffs.basis;
  const std::size_t n = predicted.size();
  const int nx = model.state_dim();
  std::vector<Vec> rho(n, Vec::Zero(nx));
  if (n < 2) return rho;

  std::vector<double> w(basis.size());
  const double scale = 2.0 * q / duration;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const auto ik = static_cast<Eigen::Index>(k);
    w[k] = scale * basis.lambda()[ik] * (coeffs.values[ik] - target.phi.values[ik]);
  }
  const auto& idx = model.search_indices();

  // Position part of the running cost gradient at sample j.
  auto forcing = [&](std::size_t j) {
    const Vec& x = predicted.states[j];
    Vec s(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) s[static_cast<Eigen::Index>(i)] = x[idx[i]];
    const Vec g = clamped_basis_gradient(basis, s, w);
    Vec out = Vec::Zero(nx);
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = g[static_cast<Eigen::Index>(i)];
    return out;
  };

  // Discrete adjoint of the trapezoid-averaged metric. Each step's state
  // transition is the Crank-Nicolson one, exact for the double integrator.
  const auto weights = predicted.trapezoid_weights();
  const Mat eye = Mat::Identity(nx, nx);
  Mat a_next = model.state_jacobian(predicted.states[n - 1], predicted.controls[n - 1]);
  for (std::size_t j = n - 1; j > 0; --j) {
    const double h = predicted.times[j] - predicted.times[j - 1];
    const Mat a_prev = model.state_jacobian(predicted.states[j - 1], predicted.controls[j - 1]);
    const Vec v = rho[j] + weights[j] * forcing(j);
    const Vec y = (eye - 0.5 * h * a_next).transpose().partialPivLu().solve(v);
    rho[j - 1] = (eye + 0.5 * h * a_prev).transpose() * y;
    if (!rho[j - 1].allFinite()) throw NumericError("adjoint became non-finite");
    a_next = a_prev;
  }
  return rho;
}

ErgodicController::ErgodicController(ModelPtr model, BasisPtr basis, ErgodicControllerConfig config)
    : model_(std::move(model)), basis_(std::move(basis)), config_(std::move(config)), history_(basis_) {
  config_.validate(model_->control_dim());
  if (static_cast<int>(model_->search_indices().size()) != basis_->domain().dims)
    throw ConfigError("model search space and basis domain differ in dimension");
}

void ErgodicController::record(double t, const Vec& x) {
  history_.append(t, model_->search_position(x));
}

Trajectory ErgodicController::rollout(const Vec& x_i, double t_i,
                                      const std::optional<ControlAction>& action) const {
  const Vec u_def = config_.default_control(model_->control_dim());
  if (!action) return simulate_forward(*model_, x_i, t_i, config_.horizon, config_.dt, u_def);
  const ControlAction a = *action;
  const double cuts[2] = {a.tau, a.tau + a.lambda};
  return integrate(
      *model_, x_i, [&a, &u_def](double t) { return a.active_at(t) ? a.u_star : u_def; }, t_i,
      config_.horizon, config_.dt, cuts);
}

BlendedCoefficients ErgodicController::blend(const Trajectory& predicted, double t_i) const {
  const std::size_t nk = basis_->size();
  const auto hist = history_.window_integral(t_i, config_.history_window);
  Vec acc = hist.integral;
  double total = hist.duration;
  Vec fk(static_cast<Eigen::Index>(nk));
  const auto weights = predicted.trapezoid_weights();
  for (std::size_t j = 0; j < predicted.size(); ++j) {
    if (weights[j] == 0.0) continue;
    const Vec s = basis_->domain().clamp(model_->search_position(predicted.states[j]));
    basis_->evaluate_all(s, std::span<double>(fk.data(), nk));
    acc += weights[j] * fk;
    total += weights[j];
  }
  if (!(total > 0.0)) throw DegenerateError("both history and prediction are empty");
  return {{basis_, acc / total}, total};
}

double ErgodicController::horizon_metric(const Vec& x_i, double t_i, const TargetDistribution& target,
                                         const std::optional<ControlAction>& action) const {
  return ergodic_metric(blend(rollout(x_i, t_i, action), t_i).coeffs, target, config_.q);
}

ControlAction ErgodicController::plan(const Vec& x_i, double t_i, const TargetDistribution& target) const {
  const int m = model_->control_dim();
  const Mat R = config_.control_weight(m);
  const Vec u_def = config_.default_control(m);

  const Trajectory predicted = rollout(x_i, t_i, std::nullopt);
  const BlendedCoefficients blended = blend(predicted, t_i);
  const double e0 = ergodic_metric(blended.coeffs, target, config_.q);
  const auto rho = adjoint_backward(*model_, predicted, blended.coeffs, target, config_.q, blended.duration);

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_j = 0;
  Vec best_u = u_def;
  for (std::size_t j = 0; j < predicted.size(); ++j) {
    const Mat h = model_->input_map(predicted.states[j]);
    const Vec hr = h.transpose() * rho[j];
    const Mat omega = hr * hr.transpose();
    const Mat lhs = omega + R.transpose();
    const Vec rhs = omega * u_def + hr * config_.alpha_d;
    Eigen::LLT<Mat> llt(lhs);
    Vec u_star;
    if (llt.info() == Eigen::Success) {
      u_star = llt.solve(rhs);
    } else {
      spdlog::warn("control law matrix is singular at t={}; regularizing", predicted.times[j]);
      u_star = (lhs + 1e-9 * Mat::Identity(m, m)).ldlt().solve(rhs);
    }
    const double mig = rho[j].dot(h * (u_star - u_def));
    if (mig < best) {
      best = mig;
      best_j = j;
      best_u = u_star;
    }
  }

  ControlAction fallback;
  fallback.u_star = u_def;
  fallback.tau = predicted.times[best_j];
  fallback.lambda = config_.lambda_min;
  fallback.metric_default = e0;
  fallback.metric_applied = e0;
  fallback.mode_insertion_gradient = std::isfinite(best) ? best : 0.0;
  if (!(best < 0.0)) {
    fallback.tau = t_i;
    return fallback;
  }

  ControlAction trial;
  trial.u_star = model_->saturate(best_u);
  trial.tau = predicted.times[best_j];
  trial.mode_insertion_gradient = best;
  trial.metric_default = e0;
  double lambda = std::min(config_.lambda_init_fraction * config_.horizon, config_.horizon);
  for (int it = 0; it < config_.max_line_search && lambda >= config_.lambda_min * (1.0 - 1e-9); ++it) {
    trial.lambda = lambda;
    const double e = horizon_metric(x_i, t_i, target, trial);
    if (e < e0) {
      trial.metric_applied = e;
      trial.descent = true;
      return trial;
    }
    lambda *= config_.lambda_shrink;
  }
  return fallback;
}

ControlAction compute_action(const ModelPtr& model, const BasisPtr& basis,
                             const ErgodicControllerConfig& config, const Vec& x_i, double t_i,
                             const Trajectory& history, const TargetDistribution& target) {
  ErgodicController controller(model, basis, config);
  for (std::size_t j = 0; j < history.size(); ++j) {
    if (history.times[j] >= t_i) break;
    controller.record(history.times[j], history.states[j]);
  }
  return controller.plan(x_i, t_i, target);
}

}  // namespace ergsense
