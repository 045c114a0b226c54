#pragma once

#include "ergsense/environment.hpp"
#include "ergsense/likelihood.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace ergsense {

/// Box prior over (t_x, t_y, alpha).
struct ThetaBounds {
  std::array<double, 3> lo{0.0, 0.0, -2.0 * kPi};
  std::array<double, 3> hi{1.2, 1.0, 2.0 * kPi};

  void validate() const;
};

struct FilterConfig {
  std::size_t num_particles = 2000;
  /// Resample when ESS drops below this fraction of N.
  double ess_fraction = 0.5;
  std::array<double, 3> jitter{0.005, 0.005, 0.01};
  double jitter_anneal = 0.99;
  double likelihood_floor = 0.01;
  /// Multiplier on the kernel bandwidth (4 / ((d + 2) N))^(1 / (d + 4)) of
  /// a regularized filter. The per-axis jitter is the larger of the annealed
  /// fixed jitter and this bandwidth times the cloud's standard deviation.
  /// Zero keeps only the fixed jitter.
  double regularization = 1.0;
  /// Metropolis-Hastings rejuvenation sweeps after each resample. Each
  /// sweep proposes the jitter move for every particle and accepts it
  /// against the likelihood of every measurement so far and the prior box,
  /// so the jitter cannot smear the cloud across modes the data rule out.
  /// Zero keeps plain jittered resampling.
  std::size_t move_steps = 3;
  /// Share of move proposals drawn from the prior box instead of the jitter
  /// kernel. These independence proposals let a particle leave a mode that
  /// the whole cloud has settled on when the data favour another.
  double global_move_fraction = 0.3;

  void validate() const;
};

/// Weighted SE(2) hypotheses plus the random stream and jitter scale that
/// the filter advances.
struct ParticleSet {
  std::vector<SE2> thetas;
  std::vector<double> weights;
  Rng rng{0};
  double jitter_scale = 1.0;
  std::size_t resample_count = 0;
  /// Prior the cloud was drawn from; the move step respects it.
  ThetaBounds prior;
  /// Every measurement the set has absorbed, in order.
  std::vector<Point2> seen_x;
  std::vector<int> seen_y;
  std::size_t moves_proposed = 0;
  std::size_t moves_accepted = 0;

  std::size_t size() const { return thetas.size(); }
};

ParticleSet init_uniform(const ThetaBounds& bounds, std::size_t n, std::uint64_t seed);

/// p(y | theta, x_v) for one particle: the field at the pulled-back point
/// (or its complement for y = 0), clamped to [floor, 1 - floor].
double measurement_likelihood(const LikelihoodField& field, const SE2& theta, const Point2& x_v,
                              int y, double floor);

/// Multiplies weights by the measurement likelihood and renormalizes. Total
/// underflow resets to uniform weights with a warning.
void reweight(ParticleSet& particles, const LikelihoodField& field, const Point2& x_v, int y,
              double likelihood_floor);

double effective_sample_size(const ParticleSet& particles);

/// Systematic resampling followed by annealed Gaussian jitter.
void resample(ParticleSet& particles, const FilterConfig& config);

/// Systematic resampling followed by `move_steps` Metropolis-Hastings
/// sweeps whose proposal is the jitter kernel.
void resample_move(ParticleSet& particles, const LikelihoodField& field, const FilterConfig& config);

/// Sum of log measurement likelihoods of every absorbed measurement.
double history_log_likelihood(const ParticleSet& particles, const LikelihoodField& field, const SE2& theta,
                              double likelihood_floor);

/// Offspring counts of systematic resampling with offset u in [0, 1).
std::vector<std::size_t> systematic_counts(const std::vector<double>& weights, std::size_t n, double u);

/// Full Bayesian update: reweight, record the measurement, then resample
/// (and move) when ESS < fraction * N.
void update(ParticleSet& particles, const LikelihoodField& field, const Point2& x_v, int y,
            const FilterConfig& config);

struct ThetaEstimate {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();

  SE2 as_se2() const { return {mean[0], mean[1], mean[2]}; }
};

/// Weighted mean with a circular mean for alpha; covariance uses wrapped
/// angular residuals.
ThetaEstimate estimate(const ParticleSet& particles);

/// Per-component error against the truth, angle wrapped to (-pi, pi].
Eigen::Vector3d theta_error(const SE2& estimate, const SE2& truth);

}  // namespace ergsense
