#pragma once

#include "ergsense/dynamics.hpp"
#include "ergsense/filter.hpp"
#include "ergsense/likelihood.hpp"

#include <span>
#include <vector>

namespace ergsense {

struct EERConfig {
  std::size_t n_samples = 200;
  /// Diagonal LQR weights on position error, velocity and control.
  double q_position = 100.0;
  double q_velocity = 10.0;
  double r_control = 1.0;
  /// Discretization step of the tracking law (the simulation step).
  double dt = 0.01;
  double replan_period = 1.0;
  double likelihood_floor = 0.01;

  void validate() const;
};

/// -sum w log w with 0 log 0 = 0.
double entropy(std::span<const double> weights);

/// Entropy of a Bernoulli(p) variable in nats.
double bernoulli_entropy(double p);

/// `n` points drawn uniformly over the domain.
std::vector<Vec> draw_candidates(const SearchDomain& domain, std::size_t n, Rng& rng);

struct CandidateScores {
  std::vector<double> reduction;
  std::size_t best = 0;
};

/// H(theta) - sum_y p(y | s) H(theta | y) for each candidate, using a
/// reweight-only hypothetical update. Ties go to the lowest index.
CandidateScores score_localization(const ParticleSet& belief, const LikelihoodField& field,
                                   std::span<const Vec> candidates, double likelihood_floor);

/// Stage-1 score: the Bernoulli entropy of the field at each candidate,
/// which a single reading at that point would resolve.
CandidateScores score_exploration(const LikelihoodField& field, std::span<const Vec> candidates);

/// Draws candidates from `rng` and returns the best one.
Vec select_target(const ParticleSet& belief, const LikelihoodField& field, const SearchDomain& domain,
                  const EERConfig& config, Rng& rng);
Vec select_target(const LikelihoodField& field, const SearchDomain& domain, const EERConfig& config,
                  Rng& rng);

/// P solving the discrete algebraic Riccati equation
///   P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q
/// by the structured doubling algorithm. Throws NumericError when it fails
/// to converge.
Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, int max_iterations = 100,
               double tolerance = 1e-13);

/// Infinite-horizon discrete LQR regulator for the zero-order-hold double
/// integrator, driving the position to a fixed point at rest.
class LqrTracker {
 public:
  LqrTracker(const DoubleIntegrator& model, const EERConfig& config);

  /// Saturated u = -K (x - [target; 0]).
  Vec control(const Vec& x, const Vec& target) const;

  const Mat& gain() const { return K_; }
  const Mat& riccati() const { return P_; }
  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }

 private:
  Vec u_min_;
  Vec u_max_;
  Mat A_;
  Mat B_;
  Mat P_;
  Mat K_;
};

/// ZOH discretization of the v-dimensional double integrator.
void double_integrator_zoh(int v, double dt, Mat& A, Mat& B);

}  // namespace ergsense
