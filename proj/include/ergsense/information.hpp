#pragma once

#include "ergsense/domain.hpp"
#include "ergsense/filter.hpp"
#include "ergsense/likelihood.hpp"

#include <cstddef>

namespace ergsense {

struct EIDConfig {
  /// Scalar measurement noise variance in the Fisher information.
  double sigma = 0.01;
  /// Nodes per axis of the world-frame EID grid.
  int grid_resolution = 48;
  double det_floor = 1e-12;
  /// Cap on particles entering the Monte Carlo sum; larger sets are thinned
  /// by deterministic systematic selection. Zero uses every particle.
  std::size_t max_particles = 256;

  void validate() const;
};

/// I(s) = grad(s) Sigma^{-1} grad(s)^T, rank one for a scalar measurement.
Mat pointwise_fisher(const LikelihoodField& field, const Vec& s_bar, double sigma);

/// Belief-averaged transform information
///   M(s) = sum_j w_j J(s, theta_j)^T I(g(theta_j)^{-1} s) J(s, theta_j)
/// over a world-frame grid. Pullbacks outside the field's domain contribute
/// nothing. Returns det M(s) per node before any flooring.
GridField information_determinant(const LikelihoodField& field, const ParticleSet& particles,
                                  const SearchDomain& world, const EIDConfig& config);

/// M(s) at one world point, for inspection and tests.
Eigen::Matrix3d transform_information(const LikelihoodField& field, const ParticleSet& particles,
                                      const Eigen::Vector2d& s, double sigma);

/// det M floored and normalized into a target distribution over `basis`'s
/// domain. Falls back to a uniform target (with a warning) when every node
/// hits the floor.
TargetDistribution expected_information_density(const BasisPtr& basis, const LikelihoodField& field,
                                                const ParticleSet& particles, const EIDConfig& config);

/// Same as above but also reports whether the uniform fallback was taken.
struct EIDResult {
  TargetDistribution target;
  GridField determinant;
  bool degenerate = false;
};

EIDResult expected_information(const BasisPtr& basis, const LikelihoodField& field,
                               const ParticleSet& particles, const EIDConfig& config);

}  // namespace ergsense
