#include "ergsense/filter.hpp"
#include "planar_sampler.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ergsense {

void ThetaBounds::validate() const {
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(hi[i] > lo[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
      throw ConfigError("prior bounds must be finite and non-empty");
  }
}

void FilterConfig::validate() const {
  if (num_particles < 1) throw ConfigError("particle filter needs at least one particle");
  if (!(ess_fraction >= 0.0 && ess_fraction <= 1.0)) throw ConfigError("ess_fraction must be in [0, 1]");
  if (!(likelihood_floor > 0.0 && likelihood_floor < 0.5)) throw ConfigError("likelihood floor must be in (0, 0.5)");
  if (!(jitter_anneal > 0.0 && jitter_anneal <= 1.0)) throw ConfigError("jitter_anneal must be in (0, 1]");
  if (!(regularization >= 0.0)) throw ConfigError("regularization must be nonnegative");
  for (double j : jitter) {
    if (!(j >= 0.0)) throw ConfigError("jitter must be nonnegative");
  }
  if (!(global_move_fraction >= 0.0 && global_move_fraction <= 1.0))
    throw ConfigError("global_move_fraction must be in [0, 1]");
}

namespace {

SE2 draw_prior(const ThetaBounds& b, Rng& rng) {
  SE2 th;
  th.tx = b.lo[0] + (b.hi[0] - b.lo[0]) * uniform01(rng);
  th.ty = b.lo[1] + (b.hi[1] - b.lo[1]) * uniform01(rng);
  th.alpha = wrap_angle(b.lo[2] + (b.hi[2] - b.lo[2]) * uniform01(rng));
  return th;
}

bool in_prior(const ThetaBounds& b, const SE2& th) {
  if (th.tx < b.lo[0] || th.tx > b.hi[0] || th.ty < b.lo[1] || th.ty > b.hi[1]) return false;
  if (b.hi[2] - b.lo[2] >= 2.0 * kPi) return true;
  double d = std::fmod(th.alpha - b.lo[2], 2.0 * kPi);
  if (d < 0.0) d += 2.0 * kPi;
  return d <= b.hi[2] - b.lo[2];
}

// Per-axis jitter: annealed max of the fixed jitter and the regularized
// bandwidth times the cloud's spread.
std::array<double, 3> jitter_sd(const ParticleSet& particles, const FilterConfig& config) {
  std::array<double, 3> sd{};
  for (std::size_t i = 0; i < 3; ++i) sd[i] = config.jitter[i];
  if (config.regularization > 0.0) {
    const auto n = static_cast<double>(particles.size());
    const double h = config.regularization * std::pow(4.0 / (5.0 * n), 1.0 / 7.0);
    const auto cov = estimate(particles).covariance;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      sd[i] = std::max(sd[i], h * std::sqrt(cov(ii, ii)));
    }
  }
  for (double& v : sd) v *= particles.jitter_scale;
  return sd;
}

std::vector<SE2> systematic_copies(ParticleSet& particles) {
  const auto counts = systematic_counts(particles.weights, particles.size(), uniform01(particles.rng));
  std::vector<SE2> next;
  next.reserve(particles.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    for (std::size_t c = 0; c < counts[j]; ++c) next.push_back(particles.thetas[j]);
  }
  return next;
}

SE2 jittered(SE2 th, const std::array<double, 3>& sd, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  th.tx += sd[0] * normal(rng);
  th.ty += sd[1] * normal(rng);
  th.alpha = wrap_angle(th.alpha + sd[2] * normal(rng));
  return th;
}

void finish_resample(ParticleSet& particles, std::vector<SE2> next, const FilterConfig& config) {
  particles.thetas = std::move(next);
  particles.weights.assign(particles.size(), 1.0 / static_cast<double>(particles.size()));
  particles.jitter_scale *= config.jitter_anneal;
  ++particles.resample_count;
}

double history_ll(const ParticleSet& ps, const detail::PlanarSampler& field, const SE2& th, double floor) {
  const double c = std::cos(th.alpha);
  const double s = std::sin(th.alpha);
  double ll = 0.0;
  for (std::size_t i = 0; i < ps.seen_x.size(); ++i) {
    const double dx = ps.seen_x[i].x() - th.tx;
    const double dy = ps.seen_x[i].y() - th.ty;
    const double p = field.value(c * dx + s * dy, -s * dx + c * dy);
    ll += std::log(std::clamp(ps.seen_y[i] == 1 ? p : 1.0 - p, floor, 1.0 - floor));
  }
  return ll;
}

}  // namespace

ParticleSet init_uniform(const ThetaBounds& bounds, std::size_t n, std::uint64_t seed) {
  bounds.validate();
  if (n < 1) throw ConfigError("particle filter needs at least one particle");
  ParticleSet ps;
  ps.rng.seed(seed);
  ps.prior = bounds;
  ps.thetas.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ps.thetas.push_back(draw_prior(bounds, ps.rng));
  ps.weights.assign(n, 1.0 / static_cast<double>(n));
  return ps;
}

double measurement_likelihood(const LikelihoodField& field, const SE2& theta, const Point2& x_v,
                              int y, double floor) {
  const Point2 local = se2_inverse_apply(theta, x_v);
  const double p = field.grid().interpolate(Vec(local));
  const double l = y == 1 ? p : 1.0 - p;
  return std::clamp(l, floor, 1.0 - floor);
}

void reweight(ParticleSet& particles, const LikelihoodField& field, const Point2& x_v, int y,
              double likelihood_floor) {
  if (y != 0 && y != 1) throw ConfigError("measurement label must be 0 or 1");
  double total = 0.0;
  for (std::size_t j = 0; j < particles.size(); ++j) {
    particles.weights[j] *= measurement_likelihood(field, particles.thetas[j], x_v, y, likelihood_floor);
    total += particles.weights[j];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    spdlog::warn("particle weights underflowed; resetting to uniform");
    std::fill(particles.weights.begin(), particles.weights.end(), 1.0 / static_cast<double>(particles.size()));
    return;
  }
  for (double& w : particles.weights) w /= total;
}

double effective_sample_size(const ParticleSet& particles) {
  double sq = 0.0;
  for (double w : particles.weights) sq += w * w;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

std::vector<std::size_t> systematic_counts(const std::vector<double>& weights, std::size_t n, double u) {
  std::vector<std::size_t> counts(weights.size(), 0);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double cumulative = weights.empty() ? 0.0 : weights[0] / total;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = (static_cast<double>(i) + u) / static_cast<double>(n);
    while (pos >= cumulative && j + 1 < weights.size()) {
      ++j;
      cumulative += weights[j] / total;
    }
    ++counts[j];
  }
  return counts;
}

void resample(ParticleSet& particles, const FilterConfig& config) {
  const auto sd = jitter_sd(particles, config);
  auto next = systematic_copies(particles);
  for (auto& th : next) th = jittered(th, sd, particles.rng);
  finish_resample(particles, std::move(next), config);
}

double history_log_likelihood(const ParticleSet& particles, const LikelihoodField& field, const SE2& theta,
                              double likelihood_floor) {
  return history_ll(particles, detail::PlanarSampler(field.grid()), theta, likelihood_floor);
}

void resample_move(ParticleSet& particles, const LikelihoodField& field, const FilterConfig& config) {
  if (field.grid().domain.dims != 2) throw ConfigError("particle filter needs a planar likelihood field");
  const auto sd = jitter_sd(particles, config);
  const auto counts = systematic_counts(particles.weights, particles.size(), uniform01(particles.rng));
  const detail::PlanarSampler sampler(field.grid());
  const double floor = config.likelihood_floor;
  std::vector<SE2> next;
  std::vector<double> ll;
  next.reserve(particles.size());
  ll.reserve(particles.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) continue;
    const double parent = history_ll(particles, sampler, particles.thetas[j], floor);
    for (std::size_t c = 0; c < counts[j]; ++c) {
      next.push_back(particles.thetas[j]);
      ll.push_back(parent);
    }
  }
  for (std::size_t step = 0; step < config.move_steps; ++step) {
    for (std::size_t j = 0; j < next.size(); ++j) {
      // Both proposal kernels leave the posterior invariant with the plain
      // likelihood ratio: the jitter is symmetric and the other draws from
      // the (uniform) prior itself.
      const bool global = uniform01(particles.rng) < config.global_move_fraction;
      const SE2 prop = global ? draw_prior(particles.prior, particles.rng) : jittered(next[j], sd, particles.rng);
      const double u = uniform01(particles.rng);
      ++particles.moves_proposed;
      if (!in_prior(particles.prior, prop)) continue;
      const double lp = history_ll(particles, sampler, prop, floor);
      if (std::log(u) < lp - ll[j]) {
        next[j] = prop;
        ll[j] = lp;
        ++particles.moves_accepted;
      }
    }
  }
  finish_resample(particles, std::move(next), config);
}

void update(ParticleSet& particles, const LikelihoodField& field, const Point2& x_v, int y,
            const FilterConfig& config) {
  reweight(particles, field, x_v, y, config.likelihood_floor);
  particles.seen_x.push_back(x_v);
  particles.seen_y.push_back(y);
  if (effective_sample_size(particles) >= config.ess_fraction * static_cast<double>(particles.size())) return;
  if (config.move_steps > 0)
    resample_move(particles, field, config);
  else
    resample(particles, config);
}

ThetaEstimate estimate(const ParticleSet& particles) {
  ThetaEstimate est;
  double sw = 0.0;
  double sc = 0.0;
  double ss = 0.0;
  for (std::size_t j = 0; j < particles.size(); ++j) {
    const double w = particles.weights[j];
    est.mean[0] += w * particles.thetas[j].tx;
    est.mean[1] += w * particles.thetas[j].ty;
    sc += w * std::cos(particles.thetas[j].alpha);
    ss += w * std::sin(particles.thetas[j].alpha);
    sw += w;
  }
  est.mean[0] /= sw;
  est.mean[1] /= sw;
  est.mean[2] = std::atan2(ss, sc);
  for (std::size_t j = 0; j < particles.size(); ++j) {
    const double w = particles.weights[j] / sw;
    const Eigen::Vector3d r(particles.thetas[j].tx - est.mean[0], particles.thetas[j].ty - est.mean[1],
                            wrap_angle(particles.thetas[j].alpha - est.mean[2]));
    est.covariance += w * r * r.transpose();
  }
  return est;
}

Eigen::Vector3d theta_error(const SE2& est, const SE2& truth) {
  return {est.tx - truth.tx, est.ty - truth.ty, wrap_angle(est.alpha - truth.alpha)};
}

}  // namespace ergsense
