#pragma once

#include "ergsense/domain.hpp"
#include "ergsense/environment.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ergsense {

struct Measurement {
  double t = 0.0;
  Vec x;
  int y = 0;
};

/// Append-only record of (t, x_v, y) samples.
class MeasurementLog {
 public:
  void append(double t, const Vec& x, int y);
  const std::vector<Measurement>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t positives() const;

 private:
  std::vector<Measurement> samples_;
};

struct LikelihoodConfig {
  /// Squared bandwidth of k(x, x') = exp(-|x - x'|^2 / (2 sigma^2)).
  double kernel_variance = 0.01;
  double ridge = 1e-3;
  /// Nodes per axis of the cached grid; non-positive picks 64 (2-D) or 32 (3-D).
  int grid_resolution = 0;
  double prob_floor = 1e-3;
  std::size_t max_training = 2000;
  std::size_t refit_every = 25;
  int max_newton = 50;
  double tolerance = 1e-9;
  std::uint64_t subsample_seed = 0x5eedULL;

  int resolution_for(int dims) const;
  void validate() const;
};

/// Kernel logistic regression with a Gaussian kernel plus a constant
/// (bias) kernel, fit by damped Newton / IRLS on
///   (1/N) sum_i logloss(y_i, f_i) + (ridge/2) alpha' K alpha.
class KernelLogisticRegression {
 public:
  KernelLogisticRegression(double kernel_variance, double ridge);

  /// Rows of `points` are samples. Throws DegenerateError on single-class data.
  void fit(const Mat& points, std::span<const int> labels, int max_newton, double tolerance);

  double decision(const Vec& s) const;
  double probability(const Vec& s) const;
  double kernel(const Vec& a, const Vec& b) const;

  const Vec& coefficients() const { return alpha_; }
  int iterations() const { return iterations_; }

 private:
  double kernel_variance_;
  double ridge_;
  Mat points_;
  Vec alpha_;
  int iterations_ = 0;
};

/// Learned p(y = 1 | s) cached on a grid, clamped to [eps, 1 - eps].
class LikelihoodField {
 public:
  LikelihoodField() = default;
  LikelihoodField(GridField grid, double eps, std::size_t snapshot_id = 0);

  /// Constant field p everywhere (clamped).
  static LikelihoodField constant(const SearchDomain& domain, int per_axis, double p, double eps);

  struct Query {
    double p = 0.0;
    bool clamped = false;
  };

  /// Multilinear interpolation. Out-of-domain points are clamped to the
  /// boundary and flagged.
  Query query_flagged(const Vec& s) const;
  double query(const Vec& s) const { return query_flagged(s).p; }

  /// Central differences with step equal to the grid spacing.
  Vec spatial_gradient(const Vec& s) const;

  const GridField& grid() const { return grid_; }
  const SearchDomain& domain() const { return grid_.domain; }
  double eps() const { return eps_; }
  /// Number of training samples the snapshot was fit on.
  std::size_t snapshot_id() const { return snapshot_id_; }

 private:
  GridField grid_;
  double eps_ = 1e-3;
  std::size_t snapshot_id_ = 0;
};

/// Fits the classifier to the log and caches probabilities on a grid over
/// `domain`. Single-class logs produce a constant eps or 1 - eps field.
LikelihoodField fit(const MeasurementLog& log, const SearchDomain& domain,
                    const LikelihoodConfig& config);

/// Target density proportional to p(y = 1 | s).
TargetDistribution stage1_target(const BasisPtr& basis, const LikelihoodField& field);

/// Exact measurement likelihood of a scene in its model frame: 1 - flip
/// inside shapes, flip outside, sampled over the model domain.
LikelihoodField ground_truth_field(const Scene& scene, int per_axis, double eps);

/// Area under the ROC curve (Mann-Whitney, ties count half). Throws
/// DegenerateError when one class is missing.
double auc(std::span<const double> scores, std::span<const int> labels);

/// AUC of the field's grid values against scene occupancy at the same nodes.
double field_auc(const LikelihoodField& field, const Scene& scene, const SE2& theta);

}  // namespace ergsense
