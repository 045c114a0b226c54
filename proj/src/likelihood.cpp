#include "ergsense/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ergsense {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^f) - y f, stable for large |f|.
double logloss(double f, int y) {
  const double softplus = f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
  return softplus - y * f;
}

}  // namespace

void MeasurementLog::append(double t, const Vec& x, int y) {
  if (y != 0 && y != 1) throw ConfigError("measurement label must be 0 or 1");
  if (!samples_.empty() && t < samples_.back().t) throw ConfigError("measurement log is append-only in time");
  samples_.push_back({t, x, y});
}

std::size_t MeasurementLog::positives() const {
  return static_cast<std::size_t>(
      std::count_if(samples_.begin(), samples_.end(), [](const Measurement& m) { return m.y == 1; }));
}

int LikelihoodConfig::resolution_for(int dims) const {
  if (grid_resolution > 0) return grid_resolution;
  return dims >= 3 ? 32 : 64;
}

void LikelihoodConfig::validate() const {
  if (!(kernel_variance > 0.0)) throw ConfigError("kernel variance must be positive");
  if (!(ridge > 0.0)) throw ConfigError("ridge penalty must be positive");
  if (!(prob_floor > 0.0 && prob_floor < 0.5)) throw ConfigError("probability floor must be in (0, 0.5)");
  if (max_training < 1) throw ConfigError("max_training must be at least 1");
  if (refit_every < 1) throw ConfigError("refit_every must be at least 1");
}

KernelLogisticRegression::KernelLogisticRegression(double kernel_variance, double ridge)
    : kernel_variance_(kernel_variance), ridge_(ridge) {}

double KernelLogisticRegression::kernel(const Vec& a, const Vec& b) const {
  return std::exp(-(a - b).squaredNorm() / (2.0 * kernel_variance_)) + 1.0;
}

void KernelLogisticRegression::fit(const Mat& points, std::span<const int> labels, int max_newton,
                                   double tolerance) {
  const auto n = points.rows();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size())
    throw ConfigError("training points and labels disagree");
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == n) throw DegenerateError("kernel classifier needs both classes");

  points_ = points;
  Mat K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 2.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = kernel(points.row(i).transpose(), points.row(j).transpose());
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)];

  const double inv_n = 1.0 / static_cast<double>(n);
  auto objective = [&](const Vec& a, const Vec& f) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += logloss(f[i], labels[static_cast<std::size_t>(i)]);
    return inv_n * loss + 0.5 * ridge_ * a.dot(f);
  };

  alpha_ = Vec::Zero(n);
  Vec f = Vec::Zero(n);
  double obj = objective(alpha_, f);
  iterations_ = 0;
  for (int it = 0; it < max_newton; ++it) {
    ++iterations_;
    Vec p(n);
    Vec d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = sigmoid(f[i]);
      d[i] = std::sqrt(std::max(p[i] * (1.0 - p[i]), 1e-12) * inv_n);
    }
    // IRLS target: (D^2 K + ridge I) alpha = (1/N)(W f - (p - y)), with
    // D^2 = W/N, solved through the SPD matrix D K D + ridge I.
    const Vec b = d.array().square() * f.array() - inv_n * (p - y).array();
    Mat m = d.asDiagonal() * K * d.asDiagonal();
    m.diagonal().array() += ridge_;
    Eigen::LLT<Mat> llt(m);
    if (llt.info() != Eigen::Success) throw NumericError("IRLS system is not positive definite");
    const Vec kb = K * b;
    const Vec target = (b - d.cwiseProduct(llt.solve(d.cwiseProduct(kb)))) / ridge_;

    Vec step = target - alpha_;
    double t = 1.0;
    Vec a_new;
    Vec f_new;
    double obj_new = obj;
    for (int ls = 0; ls < 30; ++ls) {
      a_new = alpha_ + t * step;
      f_new = K * a_new;
      obj_new = objective(a_new, f_new);
      if (obj_new <= obj + 1e-15 * std::abs(obj)) break;
      t *= 0.5;
    }
    const double change = (f_new - f).cwiseAbs().maxCoeff();
    alpha_ = std::move(a_new);
    f = std::move(f_new);
    obj = obj_new;
    if (!alpha_.allFinite()) throw NumericError("kernel classifier diverged");
    if (change < tolerance) break;
  }
}

double KernelLogisticRegression::decision(const Vec& s) const {
  double f = 0.0;
  for (Eigen::Index j = 0; j < points_.rows(); ++j) f += alpha_[j] * kernel(s, points_.row(j).transpose());
  return f;
}

double KernelLogisticRegression::probability(const Vec& s) const { return sigmoid(decision(s)); }

LikelihoodField::LikelihoodField(GridField grid, double eps, std::size_t snapshot_id)
    : grid_(std::move(grid)), eps_(eps), snapshot_id_(snapshot_id) {
  if (!(eps_ > 0.0 && eps_ < 0.5)) throw ConfigError("probability floor must be in (0, 0.5)");
  for (double& v : grid_.values) v = std::clamp(v, eps_, 1.0 - eps_);
}

LikelihoodField LikelihoodField::constant(const SearchDomain& domain, int per_axis, double p, double eps) {
  return LikelihoodField(GridField(domain, per_axis, p), eps);
}

LikelihoodField::Query LikelihoodField::query_flagged(const Vec& s) const {
  const bool inside = grid_.domain.contains(s);
  return {grid_.interpolate(s), !inside};
}

Vec LikelihoodField::spatial_gradient(const Vec& s) const {
  const int v = grid_.domain.dims;
  Vec g(v);
  Vec a = s;
  Vec b = s;
  for (int i = 0; i < v; ++i) {
    const double h = grid_.spacing(i);
    a[i] = s[i] + h;
    b[i] = s[i] - h;
    g[i] = (grid_.interpolate(a) - grid_.interpolate(b)) / (2.0 * h);
    a[i] = s[i];
    b[i] = s[i];
  }
  return g;
}

LikelihoodField fit(const MeasurementLog& log, const SearchDomain& domain, const LikelihoodConfig& config) {
  config.validate();
  if (log.empty()) throw DegenerateError("likelihood fit needs at least one sample");
  const int per_axis = config.resolution_for(domain.dims);
  const std::size_t n_pos = log.positives();
  if (n_pos == 0) return LikelihoodField::constant(domain, per_axis, config.prob_floor, config.prob_floor);
  if (n_pos == log.size())
    return LikelihoodField::constant(domain, per_axis, 1.0 - config.prob_floor, config.prob_floor);

  // Uniform reservoir over the log, reseeded every fit so a given log
  // always yields the same training set.
  const auto& all = log.samples();
  std::vector<std::size_t> chosen;
  if (all.size() <= config.max_training) {
    chosen.resize(all.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  } else {
    Rng rng(config.subsample_seed);
    chosen.resize(config.max_training);
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    for (std::size_t i = config.max_training; i < all.size(); ++i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
      if (j < config.max_training) chosen[j] = i;
    }
    std::sort(chosen.begin(), chosen.end());
  }

  Mat points(static_cast<Eigen::Index>(chosen.size()), domain.dims);
  std::vector<int> labels(chosen.size());
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    points.row(static_cast<Eigen::Index>(r)) = all[chosen[r]].x.transpose();
    labels[r] = all[chosen[r]].y;
  }
  const auto sub_pos = std::count(labels.begin(), labels.end(), 1);
  if (sub_pos == 0 || sub_pos == static_cast<long>(labels.size())) {
    const double p = sub_pos == 0 ? config.prob_floor : 1.0 - config.prob_floor;
    return LikelihoodField::constant(domain, per_axis, p, config.prob_floor);
  }

  KernelLogisticRegression klr(config.kernel_variance, config.ridge);
  klr.fit(points, labels, config.max_newton, config.tolerance);

  GridField grid(domain, per_axis, 0.0);
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) grid.values[i] = klr.probability(grid.node(i));
  return LikelihoodField(std::move(grid), config.prob_floor, log.size());
}

TargetDistribution stage1_target(const BasisPtr& basis, const LikelihoodField& field) {
  return distribution_coefficients(basis, field.grid());
}

LikelihoodField ground_truth_field(const Scene& scene, int per_axis, double eps) {
  GridField grid = occupancy_grid(scene, SE2{}, scene.model_domain, per_axis);
  const double flip = scene.sensor.flip_noise;
  for (double& v : grid.values) v = v > 0.5 ? 1.0 - flip : flip;
  return LikelihoodField(std::move(grid), eps);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ConfigError("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  double n_pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      n_pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw DegenerateError("AUC needs both classes");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double field_auc(const LikelihoodField& field, const Scene& scene, const SE2& theta) {
  const GridField& g = field.grid();
  std::vector<int> labels(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const Vec p = g.node(i);
    labels[i] = occupancy(scene, theta, Point2(p[0], p[1])) ? 1 : 0;
  }
  return auc(g.values, labels);
}

}  // namespace ergsense
