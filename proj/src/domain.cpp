#include "ergsense/domain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ergsense {

SearchDomain::SearchDomain(std::vector<double> lengths_in, int k_max_in,
                           std::vector<double> lower_in)
    : dims(static_cast<int>(lengths_in.size())),
      lengths(std::move(lengths_in)),
      lower(std::move(lower_in)),
      k_max(k_max_in) {
  if (dims < 1) throw ConfigError("search domain needs at least one axis");
  for (double l : lengths) {
    if (!(l > 0.0) || !std::isfinite(l))
      throw ConfigError("search domain lengths must be positive");
  }
  if (lower.empty()) lower.assign(lengths.size(), 0.0);
  if (lower.size() != lengths.size())
    throw ConfigError("search domain lower corner has wrong dimension");
  if (k_max < 0) k_max = default_k_max(dims);
}

SearchDomain SearchDomain::unit(int dims, int k_max) {
  if (dims < 1) throw ConfigError("search domain needs at least one axis");
  return SearchDomain(std::vector<double>(dims, 1.0), k_max);
}

int default_k_max(int dims) { return dims >= 3 ? 6 : 10; }

std::size_t SearchDomain::num_coefficients() const {
  std::size_t n = 1;
  for (int i = 0; i < dims; ++i) n *= static_cast<std::size_t>(k_max + 1);
  return n;
}

bool SearchDomain::contains(const Vec& s, double tol) const {
  if (s.size() != dims) return false;
  for (int i = 0; i < dims; ++i) {
    if (!(s[i] >= lower[i] - tol) || !(s[i] <= lower[i] + lengths[i] + tol)) return false;
  }
  return true;
}

Vec SearchDomain::clamp(const Vec& s) const {
  Vec out = s;
  for (int i = 0; i < dims; ++i) out[i] = std::clamp(s[i], lower[i], lower[i] + lengths[i]);
  return out;
}

Vec SearchDomain::center() const {
  Vec c(dims);
  for (int i = 0; i < dims; ++i) c[i] = lower[i] + 0.5 * lengths[i];
  return c;
}

double SearchDomain::volume() const {
  return std::accumulate(lengths.begin(), lengths.end(), 1.0, std::multiplies<>());
}

bool SearchDomain::same_geometry(const SearchDomain& o) const {
  return dims == o.dims && k_max == o.k_max && lengths == o.lengths && lower == o.lower;
}

double basis_norm(const SearchDomain& domain, const BasisIndex& k) {
  double prod = 1.0;
  for (int i = 0; i < domain.dims; ++i) prod *= k[i] == 0 ? domain.lengths[i] : 0.5 * domain.lengths[i];
  return std::sqrt(prod);
}

double sobolev_weight(const BasisIndex& k) {
  double sq = 0.0;
  for (int ki : k) sq += static_cast<double>(ki) * ki;
  return std::pow(1.0 + sq, -0.5 * (static_cast<double>(k.size()) + 1.0));
}

double basis_eval(const SearchDomain& domain, const BasisIndex& k, const Vec& s) {
  if (static_cast<int>(k.size()) != domain.dims)
    throw DomainError("basis index has wrong dimension");
  for (int ki : k) {
    if (ki < 0 || ki > domain.k_max) throw DomainError("basis index outside coefficient lattice");
  }
  if (!domain.contains(s)) {
    std::ostringstream msg;
    msg << "point (" << s.transpose() << ") outside search domain";
    throw DomainError(msg.str());
  }
  double prod = 1.0;
  for (int i = 0; i < domain.dims; ++i)
    prod *= std::cos(k[i] * kPi * (s[i] - domain.lower[i]) / domain.lengths[i]);
  return prod / basis_norm(domain, k);
}

Basis::Basis(SearchDomain domain) : domain_(std::move(domain)) {
  const std::size_t n = domain_.num_coefficients();
  indices_.reserve(n);
  lambda_.resize(static_cast<Eigen::Index>(n));
  norm_.resize(static_cast<Eigen::Index>(n));
  BasisIndex k(domain_.dims, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    indices_.push_back(k);
    lambda_[static_cast<Eigen::Index>(flat)] = sobolev_weight(k);
    norm_[static_cast<Eigen::Index>(flat)] = basis_norm(domain_, k);
    for (int i = 0; i < domain_.dims; ++i) {
      if (++k[i] <= domain_.k_max) break;
      k[i] = 0;
    }
  }
}

std::size_t Basis::flat_index(const BasisIndex& k) const {
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (int i = 0; i < domain_.dims; ++i) {
    if (k[i] < 0 || k[i] > domain_.k_max) throw DomainError("basis index outside coefficient lattice");
    flat += static_cast<std::size_t>(k[i]) * stride;
    stride *= static_cast<std::size_t>(domain_.k_max + 1);
  }
  return flat;
}

void Basis::axis_tables(const Vec& s, std::vector<double>& cos_tab,
                        std::vector<double>* sin_tab) const {
  const int kk = domain_.k_max + 1;
  cos_tab.resize(static_cast<std::size_t>(domain_.dims * kk));
  if (sin_tab) sin_tab->resize(cos_tab.size());
  for (int i = 0; i < domain_.dims; ++i) {
    const double w = kPi * (s[i] - domain_.lower[i]) / domain_.lengths[i];
    for (int k = 0; k < kk; ++k) {
      cos_tab[static_cast<std::size_t>(i * kk + k)] = std::cos(k * w);
      if (sin_tab) (*sin_tab)[static_cast<std::size_t>(i * kk + k)] = std::sin(k * w);
    }
  }
}

void Basis::evaluate_all(const Vec& s, std::span<double> out) const {
  std::vector<double> cos_tab;
  axis_tables(s, cos_tab, nullptr);
  const int kk = domain_.k_max + 1;
  for (std::size_t flat = 0; flat < indices_.size(); ++flat) {
    const auto& k = indices_[flat];
    double prod = 1.0;
    for (int i = 0; i < domain_.dims; ++i) prod *= cos_tab[static_cast<std::size_t>(i * kk + k[i])];
    out[flat] = prod / norm_[static_cast<Eigen::Index>(flat)];
  }
}

Vec Basis::weighted_gradient(const Vec& s, std::span<const double> weights) const {
  std::vector<double> cos_tab;
  std::vector<double> sin_tab;
  axis_tables(s, cos_tab, &sin_tab);
  const int kk = domain_.k_max + 1;
  const int v = domain_.dims;
  Vec grad = Vec::Zero(v);
  for (std::size_t flat = 0; flat < indices_.size(); ++flat) {
    const double w = weights[flat];
    if (w == 0.0) continue;
    const auto& k = indices_[flat];
    const double scale = w / norm_[static_cast<Eigen::Index>(flat)];
    for (int i = 0; i < v; ++i) {
      if (k[i] == 0) continue;
      double term = -k[i] * kPi / domain_.lengths[i] * sin_tab[static_cast<std::size_t>(i * kk + k[i])];
      for (int j = 0; j < v; ++j) {
        if (j != i) term *= cos_tab[static_cast<std::size_t>(j * kk + k[j])];
      }
      grad[i] += scale * term;
    }
  }
  return grad;
}

BasisPtr make_basis(const SearchDomain& domain) { return std::make_shared<const Basis>(domain); }

GridField::GridField(SearchDomain d, std::vector<int> sz, double fill)
    : domain(std::move(d)), sizes(std::move(sz)) {
  if (static_cast<int>(sizes.size()) != domain.dims)
    throw ConfigError("grid sizes do not match domain dimension");
  std::size_t n = 1;
  for (int s : sizes) {
    if (s < 2) throw ConfigError("grid needs at least two nodes per axis");
    n *= static_cast<std::size_t>(s);
  }
  values.assign(n, fill);
}

GridField::GridField(SearchDomain d, int per_axis, double fill)
    : GridField(d, std::vector<int>(static_cast<std::size_t>(d.dims), per_axis), fill) {}

double GridField::spacing(int axis) const {
  return domain.lengths[static_cast<std::size_t>(axis)] / (sizes[static_cast<std::size_t>(axis)] - 1);
}

std::vector<int> GridField::unflatten(std::size_t flat) const {
  std::vector<int> idx(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    idx[i] = static_cast<int>(flat % static_cast<std::size_t>(sizes[i]));
    flat /= static_cast<std::size_t>(sizes[i]);
  }
  return idx;
}

std::size_t GridField::flatten(std::span<const int> idx) const {
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    flat += static_cast<std::size_t>(idx[i]) * stride;
    stride *= static_cast<std::size_t>(sizes[i]);
  }
  return flat;
}

Vec GridField::node(std::size_t flat) const {
  Vec p(domain.dims);
  for (int i = 0; i < domain.dims; ++i) {
    const auto n = static_cast<std::size_t>(sizes[static_cast<std::size_t>(i)]);
    p[i] = domain.lower[static_cast<std::size_t>(i)] + static_cast<double>(flat % n) * spacing(i);
    flat /= n;
  }
  return p;
}

double GridField::quadrature_weight(std::size_t flat) const {
  double w = 1.0;
  for (int i = 0; i < domain.dims; ++i) {
    const auto n = static_cast<std::size_t>(sizes[static_cast<std::size_t>(i)]);
    const std::size_t j = flat % n;
    flat /= n;
    w *= (j == 0 || j == n - 1) ? 0.5 * spacing(i) : spacing(i);
  }
  return w;
}

double GridField::integrate() const {
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) total += quadrature_weight(i) * values[i];
  return total;
}

double GridField::interpolate(const Vec& s) const {
  constexpr int kMaxDims = 8;
  const int v = domain.dims;
  if (v > kMaxDims) throw ConfigError("grid interpolation supports at most 8 axes");
  std::array<std::size_t, kMaxDims> base{};
  std::array<std::size_t, kMaxDims> stride{};
  std::array<double, kMaxDims> frac{};
  std::size_t step = 1;
  for (int i = 0; i < v; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double u = (s[i] - domain.lower[ui]) / spacing(i);
    u = std::clamp(u, 0.0, static_cast<double>(sizes[ui] - 1));
    int b = static_cast<int>(u);
    if (b >= sizes[ui] - 1) b = sizes[ui] - 2;
    base[ui] = static_cast<std::size_t>(b) * step;
    frac[ui] = u - b;
    stride[ui] = step;
    step *= static_cast<std::size_t>(sizes[ui]);
  }
  double result = 0.0;
  for (int corner = 0; corner < (1 << v); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int i = 0; i < v; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const bool hi = (corner >> i) & 1;
      flat += base[ui] + (hi ? stride[ui] : 0);
      w *= hi ? frac[ui] : 1.0 - frac[ui];
    }
    if (w != 0.0) result += w * values[flat];
  }
  return result;
}

SpectralCoefficients time_average_coefficients(const BasisPtr& basis,
                                               std::span<const Vec> positions,
                                               std::span<const double> weights) {
  if (positions.size() != weights.size())
    throw ConfigError("positions and weights differ in length");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DegenerateError("trajectory has zero duration");
  const std::size_t nk = basis->size();
  Vec acc = Vec::Zero(static_cast<Eigen::Index>(nk));
  Vec fk(static_cast<Eigen::Index>(nk));
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (weights[j] == 0.0) continue;
    basis->evaluate_all(positions[j], std::span<double>(fk.data(), nk));
    acc += weights[j] * fk;
  }
  return {basis, acc / total};
}

SpectralCoefficients trajectory_coefficients(const BasisPtr& basis, const Trajectory& traj,
                                             const std::vector<int>& search_indices) {
  if (traj.empty()) throw DegenerateError("trajectory is empty");
  const auto positions = traj.search_positions(search_indices);
  for (const auto& p : positions) {
    if (!basis->domain().contains(p)) throw DomainError("trajectory leaves the search domain");
  }
  const auto weights = traj.riemann_weights();
  return time_average_coefficients(basis, positions, weights);
}

TargetDistribution distribution_coefficients(const BasisPtr& basis, GridField density) {
  if (density.domain.lengths != basis->domain().lengths || density.domain.lower != basis->domain().lower)
    throw ConfigError("density grid and basis cover different domains");
  for (double v : density.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("target density must be finite and nonnegative");
  }
  const double mass = density.integrate();
  if (!(mass > 0.0)) throw DegenerateError("target density has zero mass");
  for (double& v : density.values) v /= mass;

  const std::size_t nk = basis->size();
  Vec phi = Vec::Zero(static_cast<Eigen::Index>(nk));
  Vec fk(static_cast<Eigen::Index>(nk));
  for (std::size_t n = 0; n < density.num_nodes(); ++n) {
    const double w = density.quadrature_weight(n) * density.values[n];
    if (w == 0.0) continue;
    basis->evaluate_all(density.node(n), std::span<double>(fk.data(), nk));
    phi += w * fk;
  }
  TargetDistribution out{std::move(density), {basis, std::move(phi)}};
  out.density.domain.k_max = basis->domain().k_max;
  return out;
}

TargetDistribution uniform_target(const BasisPtr& basis, int per_axis) {
  return distribution_coefficients(basis, GridField(basis->domain(), per_axis, 1.0));
}

double ergodic_metric(const SpectralCoefficients& coeffs, const SpectralCoefficients& target,
                      double q) {
  if (!coeffs.basis || !target.basis || !coeffs.basis->domain().same_geometry(target.basis->domain()) ||
      coeffs.values.size() != target.values.size())
    throw ConfigError("coefficient vectors use different index sets");
  const Vec diff = coeffs.values - target.values;
  return q * (coeffs.basis->lambda().array() * diff.array().square()).sum();
}

double ergodic_metric(const SpectralCoefficients& coeffs, const TargetDistribution& target,
                      double q) {
  return ergodic_metric(coeffs, target.phi, q);
}

}  // namespace ergsense
