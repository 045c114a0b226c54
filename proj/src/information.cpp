#include "ergsense/information.hpp"
#include "planar_sampler.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace ergsense {

namespace {

using detail::PlanarSampler;

struct WeightedPose {
  WeightedPose(const SE2& th, double weight)
      : theta(th), w(weight), c(std::cos(th.alpha)), s(std::sin(th.alpha)) {}
  SE2 theta;
  double w;
  double c;
  double s;
};

// Deterministic systematic selection (offset 1/2) down to at most `cap`
// particles; duplicates merge into a single heavier entry.
std::vector<WeightedPose> thin(const ParticleSet& particles, std::size_t cap) {
  std::vector<WeightedPose> out;
  if (cap == 0 || particles.size() <= cap) {
    double total = 0.0;
    for (double w : particles.weights) total += w;
    for (std::size_t j = 0; j < particles.size(); ++j)
      if (particles.weights[j] > 0.0) out.emplace_back(particles.thetas[j], particles.weights[j] / total);
    return out;
  }
  const auto counts = systematic_counts(particles.weights, cap, 0.5);
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (counts[j] > 0)
      out.emplace_back(particles.thetas[j], static_cast<double>(counts[j]) / static_cast<double>(cap));
  return out;
}

Eigen::Matrix3d accumulate(const PlanarSampler& field, const std::vector<WeightedPose>& poses,
                           const Point2& s, double sigma) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (const auto& p : poses) {
    // Pullback R(-alpha)(s - t) and its Jacobian, as in se2_inverse_apply
    // and se2_jacobian.
    const double dx = s.x() - p.theta.tx;
    const double dy = s.y() - p.theta.ty;
    const double lx = p.c * dx + p.s * dy;
    const double ly = -p.s * dx + p.c * dy;
    if (!field.contains(lx, ly)) continue;
    const Eigen::Vector2d g = field.gradient(lx, ly);
    const Eigen::Vector3d a(-p.c * g.x() + p.s * g.y(), -p.s * g.x() - p.c * g.y(),
                            (-p.s * dx + p.c * dy) * g.x() + (-p.c * dx - p.s * dy) * g.y());
    m.noalias() += (p.w / sigma) * a * a.transpose();
  }
  return m;
}

}  // namespace

void EIDConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("measurement noise variance must be positive");
  if (grid_resolution < 2) throw ConfigError("EID grid needs at least two nodes per axis");
  if (!(det_floor > 0.0)) throw ConfigError("determinant floor must be positive");
}

Mat pointwise_fisher(const LikelihoodField& field, const Vec& s_bar, double sigma) {
  const Vec g = field.spatial_gradient(s_bar);
  return g * g.transpose() / sigma;
}

Eigen::Matrix3d transform_information(const LikelihoodField& field, const ParticleSet& particles,
                                      const Eigen::Vector2d& s, double sigma) {
  if (field.domain().dims != 2) throw ConfigError("transform information is planar only");
  return accumulate(PlanarSampler(field.grid()), thin(particles, 0), s, sigma);
}

GridField information_determinant(const LikelihoodField& field, const ParticleSet& particles,
                                  const SearchDomain& world, const EIDConfig& config) {
  config.validate();
  if (field.domain().dims != 2 || world.dims != 2) throw ConfigError("transform information is planar only");
  if (particles.size() == 0) throw DegenerateError("EID needs a nonempty particle set");
  const auto poses = thin(particles, config.max_particles);
  GridField det(world, config.grid_resolution, 0.0);
  const PlanarSampler sampler(field.grid());
  for (std::size_t i = 0; i < det.num_nodes(); ++i) {
    const Vec s = det.node(i);
    det.values[i] = accumulate(sampler, poses, Point2(s[0], s[1]), config.sigma).determinant();
  }
  return det;
}

EIDResult expected_information(const BasisPtr& basis, const LikelihoodField& field,
                               const ParticleSet& particles, const EIDConfig& config) {
  EIDResult out;
  out.determinant = information_determinant(field, particles, basis->domain(), config);
  GridField density = out.determinant;
  bool any = false;
  for (double& v : density.values) {
    if (!std::isfinite(v)) throw NumericError("information determinant is not finite");
    if (v > config.det_floor) any = true;
    v = std::max(v, config.det_floor);
  }
  if (!any) {
    spdlog::warn("expected information density is degenerate; using a uniform target");
    out.degenerate = true;
    out.target = uniform_target(basis, config.grid_resolution);
    return out;
  }
  out.target = distribution_coefficients(basis, std::move(density));
  return out;
}

TargetDistribution expected_information_density(const BasisPtr& basis, const LikelihoodField& field,
                                                const ParticleSet& particles, const EIDConfig& config) {
  return expected_information(basis, field, particles, config).target;
}

}  // namespace ergsense
