#pragma once

#include "ergsense/common.hpp"

#include <cstddef>
#include <vector>

namespace ergsense {

/// Timestamped states and the controls applied at those instants.
///
/// `step` is the duration represented by a lone sample; it only matters
/// for single-sample trajectories, which have no interval of their own.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;
  double step = 0.0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  double duration() const;

  void push_back(double t, Vec x, Vec u);

  /// Throws ConfigError unless lengths agree and times strictly increase.
  void validate() const;

  /// Positions of the search-space components for every sample.
  std::vector<Vec> search_positions(const std::vector<int>& search_indices) const;

  /// Left-Riemann weights t_{j+1} - t_j; the last sample closes the
  /// interval and gets zero, except for a lone sample which gets `step`.
  std::vector<double> riemann_weights() const;

  /// Trapezoid weights over the same intervals. Used for predicted
  /// rollouts, whose time average must stay consistent with the adjoint.
  std::vector<double> trapezoid_weights() const;
};

}  // namespace ergsense
