#pragma once

#include "ergsense/common.hpp"
#include "ergsense/domain.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace ergsense {

using Point2 = Eigen::Vector2d;
using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) built from the top 53 bits of one engine output.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Planar rigid motion s -> R(alpha) s + t, mapping the model frame into
/// the world frame.
struct SE2 {
  double tx = 0.0;
  double ty = 0.0;
  double alpha = 0.0;

  Point2 translation() const { return {tx, ty}; }
  Point2 apply(const Point2& s) const;
  Point2 inverse_apply(const Point2& s) const;
  SE2 inverse() const;
  Vec as_vector() const;
  static SE2 from_vector(const Vec& theta);
};

/// a o b: first b, then a.
SE2 compose(const SE2& a, const SE2& b);

/// g(theta)^{-1} s = R(-alpha)(s - t).
Point2 se2_inverse_apply(const SE2& theta, const Point2& s);

/// d(g(theta)^{-1} s)/d(t_x, t_y, alpha).
Eigen::Matrix<double, 2, 3> se2_jacobian(const SE2& theta, const Point2& s);

enum class ShapeKind { circle, rectangle, ellipse };

/// Closed planar solid in the model frame. `size` holds the radius (both
/// components) for a circle, half-extents for a rectangle and semi-axes for
/// an ellipse.
struct Shape {
  ShapeKind kind = ShapeKind::circle;
  Point2 center = Point2::Zero();
  Point2 size = Point2::Constant(0.1);
  double rotation = 0.0;

  static Shape circle(Point2 center, double radius);
  static Shape rectangle(Point2 center, Point2 half_extents, double rotation = 0.0);
  static Shape ellipse(Point2 center, Point2 semi_axes, double rotation = 0.0);

  /// Negative inside, zero on the boundary, positive outside; exact
  /// Euclidean distance for every kind.
  double signed_distance(const Point2& p) const;
  bool contains(const Point2& p) const { return signed_distance(p) < 0.0; }
  /// Boundary point at parameter u in [0, 1).
  Point2 boundary_point(double u) const;
};

const char* to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& s);

enum class SensorMode { phantom, solid };

const char* to_string(SensorMode mode);
SensorMode sensor_mode_from_string(const std::string& s);

struct ContactSensorConfig {
  double flip_noise = 0.05;
  SensorMode mode = SensorMode::phantom;
  double sample_period = 0.1;

  void validate() const;
};

/// Ground-truth environment. Shapes live in the model frame, where stage-1
/// exploration happens over `model_domain`; localization happens over
/// `world_domain` with the shapes moved by `transform`.
struct Scene {
  std::vector<Shape> shapes;
  SearchDomain model_domain;
  SearchDomain world_domain;
  SE2 transform;
  ContactSensorConfig sensor;

  void validate() const;
};

/// Circle, square and oval around the model-frame origin, explored over
/// [-0.5, 0.5]^2 and placed at (0.5, 0.6, -1.1) inside [0, 1]^2.
Scene default_scene();

/// Index of the first shape containing g(theta)^{-1} s, or -1.
int contact_shape(const Scene& scene, const SE2& theta, const Point2& s);

bool occupancy(const Scene& scene, const SE2& theta, const Point2& s);

/// Smallest signed distance to any shape, measured in the world frame.
double scene_signed_distance(const Scene& scene, const SE2& theta, const Point2& s);

/// Binary contact reading, flipped with probability `flip_noise`.
int sense(const Scene& scene, const SE2& theta, const ContactSensorConfig& sensor,
          const Point2& x_v, Rng& rng);

/// Planar point-mass state (x, y, vx, vy) after a step from `x` to
/// `x_next`. When the segment enters a shape the position stops on the
/// surface and the inward normal velocity is removed.
struct SolidStep {
  Vec state;
  bool contact = false;
};

SolidStep solid_step(const Scene& scene, const SE2& theta, const Vec& x, const Vec& x_next);

/// Keeps a point-mass state inside `domain` with elastic walls: an
/// overshoot is mirrored back and the outward velocity component flips.
Vec confine_to_domain(const SearchDomain& domain, const Vec& x);

/// Ground-truth occupancy sampled on a grid over `domain` (1 inside, 0 outside).
GridField occupancy_grid(const Scene& scene, const SE2& theta, const SearchDomain& domain,
                         int per_axis);

}  // namespace ergsense
