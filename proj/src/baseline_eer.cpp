#include "ergsense/baseline_eer.hpp"

#include <cmath>

namespace ergsense {

void EERConfig::validate() const {
  if (n_samples < 1) throw ConfigError("EER needs at least one candidate");
  if (!(q_position > 0.0 && q_velocity >= 0.0 && r_control > 0.0))
    throw ConfigError("LQR weights must be positive");
  if (!(dt > 0.0)) throw ConfigError("LQR step must be positive");
  if (!(replan_period > 0.0)) throw ConfigError("EER replan period must be positive");
  if (!(likelihood_floor > 0.0 && likelihood_floor < 0.5)) throw ConfigError("likelihood floor must be in (0, 0.5)");
}

double entropy(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights)
    if (w > 0.0) h -= w * std::log(w);
  return h;
}

double bernoulli_entropy(double p) {
  const double w[2] = {p, 1.0 - p};
  return entropy(w);
}

std::vector<Vec> draw_candidates(const SearchDomain& domain, std::size_t n, Rng& rng) {
  std::vector<Vec> out(n, Vec(domain.dims));
  for (auto& s : out)
    for (int i = 0; i < domain.dims; ++i) {
      const double lo = domain.lower.empty() ? 0.0 : domain.lower[static_cast<std::size_t>(i)];
      s[i] = lo + domain.lengths[static_cast<std::size_t>(i)] * uniform01(rng);
    }
  return out;
}

namespace {

std::size_t first_argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

CandidateScores score_localization(const ParticleSet& belief, const LikelihoodField& field,
                                   std::span<const Vec> candidates, double likelihood_floor) {
  CandidateScores out;
  out.reduction.resize(candidates.size());
  const double h0 = entropy(belief.weights);
  const std::size_t n = belief.size();
  std::vector<double> w1(n);
  std::vector<double> w0(n);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Point2 s(candidates[c][0], candidates[c][1]);
    double z1 = 0.0;
    double z0 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double l1 = measurement_likelihood(field, belief.thetas[j], s, 1, likelihood_floor);
      w1[j] = belief.weights[j] * l1;
      w0[j] = belief.weights[j] * (1.0 - l1);
      z1 += w1[j];
      z0 += w0[j];
    }
    const double p1 = z1 / (z1 + z0);
    for (std::size_t j = 0; j < n; ++j) {
      w1[j] /= z1;
      w0[j] /= z0;
    }
    out.reduction[c] = h0 - (p1 * entropy(w1) + (1.0 - p1) * entropy(w0));
  }
  out.best = first_argmax(out.reduction);
  return out;
}

CandidateScores score_exploration(const LikelihoodField& field, std::span<const Vec> candidates) {
  CandidateScores out;
  out.reduction.reserve(candidates.size());
  for (const auto& s : candidates) out.reduction.push_back(bernoulli_entropy(field.query(s)));
  out.best = first_argmax(out.reduction);
  return out;
}

Vec select_target(const ParticleSet& belief, const LikelihoodField& field, const SearchDomain& domain,
                  const EERConfig& config, Rng& rng) {
  config.validate();
  const auto candidates = draw_candidates(domain, config.n_samples, rng);
  return candidates[score_localization(belief, field, candidates, config.likelihood_floor).best];
}

Vec select_target(const LikelihoodField& field, const SearchDomain& domain, const EERConfig& config,
                  Rng& rng) {
  config.validate();
  const auto candidates = draw_candidates(domain, config.n_samples, rng);
  return candidates[score_exploration(field, candidates).best];
}

Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, int max_iterations,
               double tolerance) {
  const auto n = A.rows();
  const Mat I = Mat::Identity(n, n);
  Mat Ak = A;
  Mat G = B * R.ldlt().solve(B.transpose());
  Mat H = Q;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::PartialPivLU<Mat> W(I + G * H);
    const Mat WA = W.solve(Ak);
    const Mat WG = W.solve(G);
    const Mat H_next = H + Ak.transpose() * H * WA;
    G = G + Ak * WG * Ak.transpose();
    Ak = Ak * WA;
    const double change = (H_next - H).norm();
    H = 0.5 * (H_next + H_next.transpose());
    if (!H.allFinite()) break;
    if (change <= tolerance * std::max(1.0, H.norm())) {
      // Doubling can settle on a non-stabilizing root when (A, B) is not
      // stabilizable; reject those.
      const Mat K = (R + B.transpose() * H * B).ldlt().solve(B.transpose() * H * A);
      const double radius = Eigen::EigenSolver<Mat>(A - B * K).eigenvalues().cwiseAbs().maxCoeff();
      if (!(radius < 1.0)) throw NumericError("Riccati solution does not stabilize the system");
      return H;
    }
  }
  throw NumericError("Riccati iteration did not converge");
}

void double_integrator_zoh(int v, double dt, Mat& A, Mat& B) {
  const Mat I = Mat::Identity(v, v);
  A = Mat::Identity(2 * v, 2 * v);
  A.topRightCorner(v, v) = dt * I;
  B.resize(2 * v, v);
  B.topRows(v) = 0.5 * dt * dt * I;
  B.bottomRows(v) = dt * I;
}

LqrTracker::LqrTracker(const DoubleIntegrator& model, const EERConfig& config)
    : u_min_(model.u_min()), u_max_(model.u_max()) {
  config.validate();
  const int v = model.dims();
  double_integrator_zoh(v, config.dt, A_, B_);
  Vec qd(2 * v);
  qd.head(v).setConstant(config.q_position);
  qd.tail(v).setConstant(config.q_velocity);
  const Mat Q = qd.asDiagonal();
  const Mat R = config.r_control * Mat::Identity(v, v);
  P_ = solve_dare(A_, B_, Q, R);
  K_ = (R + B_.transpose() * P_ * B_).ldlt().solve(B_.transpose() * P_ * A_);
}

Vec LqrTracker::control(const Vec& x, const Vec& target) const {
  const auto v = target.size();
  Vec err = x;
  err.head(v) -= target;
  const Vec u = -K_ * err;
  return u.cwiseMax(u_min_).cwiseMin(u_max_);
}

}  // namespace ergsense
