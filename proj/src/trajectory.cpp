#include "ergsense/trajectory.hpp"

#include <cmath>

namespace ergsense {

double Trajectory::duration() const {
  if (times.empty()) return 0.0;
  if (times.size() == 1) return step;
  return times.back() - times.front();
}

void Trajectory::push_back(double t, Vec x, Vec u) {
  times.push_back(t);
  states.push_back(std::move(x));
  controls.push_back(std::move(u));
}

void Trajectory::validate() const {
  if (states.size() != times.size() || controls.size() != times.size())
    throw ConfigError("trajectory columns have different lengths");
  for (std::size_t j = 1; j < times.size(); ++j) {
    if (!(times[j] > times[j - 1])) throw ConfigError("trajectory times must strictly increase");
  }
}

std::vector<Vec> Trajectory::search_positions(const std::vector<int>& search_indices) const {
  std::vector<Vec> out;
  out.reserve(states.size());
  for (const auto& x : states) {
    Vec p(static_cast<Eigen::Index>(search_indices.size()));
    for (std::size_t i = 0; i < search_indices.size(); ++i) p[static_cast<Eigen::Index>(i)] = x[search_indices[i]];
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> Trajectory::riemann_weights() const {
  std::vector<double> w(times.size(), 0.0);
  if (times.size() == 1) {
    w[0] = step;
    return w;
  }
  for (std::size_t j = 0; j + 1 < times.size(); ++j) w[j] = times[j + 1] - times[j];
  return w;
}

std::vector<double> Trajectory::trapezoid_weights() const {
  std::vector<double> w(times.size(), 0.0);
  if (times.size() == 1) {
    w[0] = step;
    return w;
  }
  for (std::size_t j = 0; j + 1 < times.size(); ++j) {
    const double h = 0.5 * (times[j + 1] - times[j]);
    w[j] += h;
    w[j + 1] += h;
  }
  return w;
}

}  // namespace ergsense
