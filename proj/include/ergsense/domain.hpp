#pragma once

#include "ergsense/common.hpp"
#include "ergsense/trajectory.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace ergsense {

/// Rectangular search region [lower_i, lower_i + L_i] with the per-axis
/// maximum Fourier index used by the ergodic metric.
///
/// The lower corner defaults to the origin. A nonzero corner lets a model
/// frame be centred on its own origin while the cosine basis still sees
/// the familiar [0, L_i] coordinates.
struct SearchDomain {
  int dims = 2;
  std::vector<double> lengths;
  std::vector<double> lower;
  int k_max = 10;

  SearchDomain() = default;
  SearchDomain(std::vector<double> lengths, int k_max,
               std::vector<double> lower = {});

  /// Unit hypercube [0,1]^dims.
  static SearchDomain unit(int dims, int k_max = -1);

  std::size_t num_coefficients() const;
  bool contains(const Vec& s, double tol = 1e-12) const;
  Vec clamp(const Vec& s) const;
  Vec center() const;
  double volume() const;

  bool same_geometry(const SearchDomain& other) const;
};

/// Default K per dimension: 10 for planar domains, 6 for volumes.
int default_k_max(int dims);

/// Multi-index k into the coefficient lattice {0..K}^v.
using BasisIndex = std::vector<int>;

/// Precomputed normalizers h_k and weights Lambda_k for every k in the
/// lattice. Flat ordering has axis 0 varying fastest.
class Basis {
 public:
  explicit Basis(SearchDomain domain);

  const SearchDomain& domain() const { return domain_; }
  std::size_t size() const { return indices_.size(); }
  const std::vector<BasisIndex>& indices() const { return indices_; }
  const Vec& lambda() const { return lambda_; }
  const Vec& norm() const { return norm_; }

  std::size_t flat_index(const BasisIndex& k) const;

  /// F_k(s) for every k. `s` must already lie inside the domain.
  void evaluate_all(const Vec& s, std::span<double> out) const;

  /// sum_k weights[k] * dF_k/ds, a vector of length dims.
  Vec weighted_gradient(const Vec& s, std::span<const double> weights) const;

 private:
  void axis_tables(const Vec& s, std::vector<double>& cos_tab,
                   std::vector<double>* sin_tab) const;

  SearchDomain domain_;
  std::vector<BasisIndex> indices_;
  Vec lambda_;
  Vec norm_;
};

using BasisPtr = std::shared_ptr<const Basis>;

BasisPtr make_basis(const SearchDomain& domain);

/// F_k(s) = (1/h_k) prod_i cos(k_i pi (s_i - lower_i) / L_i). Throws
/// DomainError when s is outside the domain or k is outside the lattice.
double basis_eval(const SearchDomain& domain, const BasisIndex& k, const Vec& s);

/// h_k = sqrt(prod_i l_i), l_i = L_i when k_i = 0 and L_i / 2 otherwise.
double basis_norm(const SearchDomain& domain, const BasisIndex& k);

/// Lambda_k = (1 + |k|^2)^(-(v+1)/2).
double sobolev_weight(const BasisIndex& k);

/// Node-sampled scalar field over a domain. Nodes include both boundaries;
/// values are stored with axis 0 varying fastest.
struct GridField {
  SearchDomain domain;
  std::vector<int> sizes;
  std::vector<double> values;

  GridField() = default;
  GridField(SearchDomain domain, std::vector<int> sizes, double fill = 0.0);
  /// Same resolution along every axis.
  GridField(SearchDomain domain, int per_axis, double fill = 0.0);

  std::size_t num_nodes() const { return values.size(); }
  double spacing(int axis) const;
  Vec node(std::size_t flat) const;
  std::vector<int> unflatten(std::size_t flat) const;
  std::size_t flatten(std::span<const int> idx) const;

  /// Trapezoid-rule quadrature weight of a node.
  double quadrature_weight(std::size_t flat) const;
  double integrate() const;

  /// Multilinear interpolation; `s` is clamped into the domain first.
  double interpolate(const Vec& s) const;
};

struct SpectralCoefficients {
  BasisPtr basis;
  Vec values;
};

/// Normalized target density and its coefficients phi_k.
struct TargetDistribution {
  GridField density;
  SpectralCoefficients phi;
};

/// Left-Riemann time average of F_k along sampled search-space positions.
/// Each weight is the duration the corresponding sample represents.
SpectralCoefficients time_average_coefficients(const BasisPtr& basis,
                                               std::span<const Vec> positions,
                                               std::span<const double> weights);

/// c_k of a trajectory: left-Riemann average of F_k over the samples'
/// search-space components. Throws DegenerateError for zero duration and
/// DomainError when a sample leaves the domain.
SpectralCoefficients trajectory_coefficients(const BasisPtr& basis,
                                             const Trajectory& traj,
                                             const std::vector<int>& search_indices);

/// Normalizes `density` to unit mass and computes phi_k by trapezoid
/// quadrature. Throws DegenerateError for an all-zero grid and DomainError
/// for negative values.
TargetDistribution distribution_coefficients(const BasisPtr& basis, GridField density);

/// Uniform target over the basis domain.
TargetDistribution uniform_target(const BasisPtr& basis, int per_axis);

/// q * sum_k Lambda_k (c_k - phi_k)^2.
double ergodic_metric(const SpectralCoefficients& coeffs,
                      const SpectralCoefficients& target, double q);
double ergodic_metric(const SpectralCoefficients& coeffs,
                      const TargetDistribution& target, double q);

}  // namespace ergsense
