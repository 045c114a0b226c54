#include "ergsense/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ergsense {

double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

namespace {

Eigen::Matrix2d rot2(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

double robust_length(double a, double b) {
  const double m = std::max(std::abs(a), std::abs(b));
  if (m == 0.0) return 0.0;
  return m * std::hypot(a / m, b / m);
}

// Root of sum (r_i z_i / (s + r_i))^2 - 1 by bisection.
double ellipse_root(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = g < 0.0 ? 0.0 : robust_length(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < 1100; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double ratio0 = n0 / (s + r0);
    const double ratio1 = z1 / (s + 1.0);
    const double gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
    if (gs > 0.0) {
      s0 = s;
    } else if (gs < 0.0) {
      s1 = s;
    } else {
      break;
    }
  }
  return s;
}

// Distance from (y0, y1), both >= 0, to the ellipse with semi-axes
// e0 >= e1 > 0 (Eberly's bisection formulation).
double ellipse_distance_quadrant(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0;
      const double z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double sbar = ellipse_root(r0, z0, z1, g);
      const double x0 = r0 * y0 / (sbar + r0);
      const double x1 = y1 / (sbar + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0;
  const double denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0;
    const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

}  // namespace

Point2 SE2::apply(const Point2& s) const { return rot2(alpha) * s + translation(); }

Point2 SE2::inverse_apply(const Point2& s) const { return se2_inverse_apply(*this, s); }

SE2 SE2::inverse() const {
  const Point2 t = -(rot2(-alpha) * translation());
  return {t.x(), t.y(), -alpha};
}

Vec SE2::as_vector() const {
  Vec v(3);
  v << tx, ty, alpha;
  return v;
}

SE2 SE2::from_vector(const Vec& theta) {
  if (theta.size() != 3) throw ConfigError("SE(2) parameters need three components");
  return {theta[0], theta[1], theta[2]};
}

SE2 compose(const SE2& a, const SE2& b) {
  const Point2 t = rot2(a.alpha) * b.translation() + a.translation();
  return {t.x(), t.y(), a.alpha + b.alpha};
}

Point2 se2_inverse_apply(const SE2& theta, const Point2& s) {
  const double c = std::cos(theta.alpha);
  const double sn = std::sin(theta.alpha);
  const double dx = s.x() - theta.tx;
  const double dy = s.y() - theta.ty;
  return {c * dx + sn * dy, -sn * dx + c * dy};
}

Eigen::Matrix<double, 2, 3> se2_jacobian(const SE2& theta, const Point2& s) {
  const double c = std::cos(theta.alpha);
  const double sn = std::sin(theta.alpha);
  const double dx = s.x() - theta.tx;
  const double dy = s.y() - theta.ty;
  Eigen::Matrix<double, 2, 3> j;
  j << -c, -sn, -sn * dx + c * dy,
       sn, -c, -c * dx - sn * dy;
  return j;
}

Shape Shape::circle(Point2 center, double radius) {
  return {ShapeKind::circle, center, Point2::Constant(radius), 0.0};
}

Shape Shape::rectangle(Point2 center, Point2 half_extents, double rot) {
  return {ShapeKind::rectangle, center, half_extents, rot};
}

Shape Shape::ellipse(Point2 center, Point2 semi_axes, double rot) {
  return {ShapeKind::ellipse, center, semi_axes, rot};
}

double Shape::signed_distance(const Point2& p) const {
  const Point2 local = rot2(-rotation) * (p - center);
  switch (kind) {
    case ShapeKind::circle:
      return local.norm() - size.x();
    case ShapeKind::rectangle: {
      const Point2 q = local.cwiseAbs() - size;
      const double outside = q.cwiseMax(0.0).norm();
      const double inside = std::min(std::max(q.x(), q.y()), 0.0);
      return outside + inside;
    }
    case ShapeKind::ellipse: {
      double e0 = size.x();
      double e1 = size.y();
      double y0 = std::abs(local.x());
      double y1 = std::abs(local.y());
      if (e0 < e1) {
        std::swap(e0, e1);
        std::swap(y0, y1);
      }
      const double d = ellipse_distance_quadrant(e0, e1, y0, y1);
      const double level = (y0 / e0) * (y0 / e0) + (y1 / e1) * (y1 / e1);
      return level < 1.0 ? -d : d;
    }
  }
  return std::numeric_limits<double>::infinity();
}

Point2 Shape::boundary_point(double u) const {
  const double a = 2.0 * kPi * u;
  Point2 local;
  switch (kind) {
    case ShapeKind::circle:
    case ShapeKind::ellipse:
      local = {size.x() * std::cos(a), size.y() * std::sin(a)};
      break;
    case ShapeKind::rectangle: {
      const double w = 2.0 * size.x();
      const double h = 2.0 * size.y();
      double d = u * 2.0 * (w + h);
      if (d < w) {
        local = {-size.x() + d, -size.y()};
      } else if ((d -= w) < h) {
        local = {size.x(), -size.y() + d};
      } else if ((d -= h) < w) {
        local = {size.x() - d, size.y()};
      } else {
        d -= w;
        local = {-size.x(), size.y() - d};
      }
      break;
    }
  }
  return rot2(rotation) * local + center;
}

const char* to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::circle: return "circle";
    case ShapeKind::rectangle: return "rectangle";
    case ShapeKind::ellipse: return "ellipse";
  }
  return "unknown";
}

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "circle") return ShapeKind::circle;
  if (s == "rectangle" || s == "square") return ShapeKind::rectangle;
  if (s == "ellipse" || s == "oval") return ShapeKind::ellipse;
  throw ConfigError("unknown shape kind '" + s + "'");
}

const char* to_string(SensorMode mode) { return mode == SensorMode::solid ? "solid" : "phantom"; }

SensorMode sensor_mode_from_string(const std::string& s) {
  if (s == "phantom") return SensorMode::phantom;
  if (s == "solid") return SensorMode::solid;
  throw ConfigError("unknown sensor mode '" + s + "'");
}

void ContactSensorConfig::validate() const {
  if (!(flip_noise >= 0.0 && flip_noise < 0.5)) throw ConfigError("flip_noise must be in [0, 0.5)");
  if (!(sample_period > 0.0)) throw ConfigError("sample period must be positive");
}

void Scene::validate() const {
  if (shapes.empty()) throw ConfigError("scene needs at least one shape");
  if (model_domain.dims != 2 || world_domain.dims != 2)
    throw ConfigError("scenes are planar; both domains must be two-dimensional");
  for (const auto& s : shapes) {
    if (!(s.size.x() > 0.0 && s.size.y() > 0.0)) throw ConfigError("shape sizes must be positive");
    if (!model_domain.contains(s.center)) throw ConfigError("shape centre outside the model domain");
  }
  sensor.validate();
}

Scene default_scene() {
  Scene scene;
  scene.shapes = {
      Shape::circle({-0.22, 0.16}, 0.09),
      Shape::rectangle({0.2, 0.18}, {0.08, 0.08}),
      Shape::ellipse({0.0, -0.2}, {0.16, 0.07}),
  };
  scene.model_domain = SearchDomain({1.0, 1.0}, 10, {-0.5, -0.5});
  scene.world_domain = SearchDomain({1.0, 1.0}, 10, {0.0, 0.0});
  scene.transform = {0.5, 0.6, -1.1};
  return scene;
}

int contact_shape(const Scene& scene, const SE2& theta, const Point2& s) {
  const Point2 local = se2_inverse_apply(theta, s);
  for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
    if (scene.shapes[i].contains(local)) return static_cast<int>(i);
  }
  return -1;
}

bool occupancy(const Scene& scene, const SE2& theta, const Point2& s) {
  return contact_shape(scene, theta, s) >= 0;
}

double scene_signed_distance(const Scene& scene, const SE2& theta, const Point2& s) {
  const Point2 local = se2_inverse_apply(theta, s);
  double d = std::numeric_limits<double>::infinity();
  for (const auto& shape : scene.shapes) d = std::min(d, shape.signed_distance(local));
  return d;
}

int sense(const Scene& scene, const SE2& theta, const ContactSensorConfig& sensor,
          const Point2& x_v, Rng& rng) {
  int y = occupancy(scene, theta, x_v) ? 1 : 0;
  if (sensor.flip_noise > 0.0 && uniform01(rng) < sensor.flip_noise) y = 1 - y;
  return y;
}

SolidStep solid_step(const Scene& scene, const SE2& theta, const Vec& x, const Vec& x_next) {
  if (x.size() != 4 || x_next.size() != 4) throw ConfigError("solid_step expects a planar point-mass state");
  const Point2 a = x.head<2>();
  const Point2 b = x_next.head<2>();
  auto sd = [&](const Point2& p) { return scene_signed_distance(scene, theta, p); };
  if (sd(a) < 0.0) return {x_next, false};

  // Thin features: march before bisecting.
  constexpr int kMarch = 16;
  double lo = 0.0;
  double hi = -1.0;
  for (int i = 1; i <= kMarch; ++i) {
    const double u = static_cast<double>(i) / kMarch;
    if (sd(a + u * (b - a)) < 0.0) {
      hi = u;
      break;
    }
    lo = u;
  }
  if (hi < 0.0) return {x_next, false};
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (sd(a + mid * (b - a)) < 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const Point2 p = a + lo * (b - a);
  constexpr double h = 1e-7;
  Point2 n((sd(p + Point2(h, 0)) - sd(p - Point2(h, 0))) / (2 * h),
           (sd(p + Point2(0, h)) - sd(p - Point2(0, h))) / (2 * h));
  if (n.norm() > 0.0) n.normalize();
  Vec out = x_next;
  out.head<2>() = p;
  Point2 v = x_next.tail<2>();
  const double vn = v.dot(n);
  if (vn < 0.0) v -= vn * n;
  out.tail<2>() = v;
  return {out, true};
}

Vec confine_to_domain(const SearchDomain& domain, const Vec& x) {
  const int v = domain.dims;
  Vec out = x;
  const bool has_velocity = x.size() >= 2 * v;
  for (int i = 0; i < v; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double lo = domain.lower[ui];
    const double hi = lo + domain.lengths[ui];
    if (out[i] < lo) {
      out[i] = std::min(2.0 * lo - out[i], hi);
      if (has_velocity && out[v + i] < 0.0) out[v + i] = -out[v + i];
    } else if (out[i] > hi) {
      out[i] = std::max(2.0 * hi - out[i], lo);
      if (has_velocity && out[v + i] > 0.0) out[v + i] = -out[v + i];
    }
  }
  return out;
}

GridField occupancy_grid(const Scene& scene, const SE2& theta, const SearchDomain& domain,
                         int per_axis) {
  GridField grid(domain, per_axis, 0.0);
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
    const Vec p = grid.node(n);
    grid.values[n] = occupancy(scene, theta, Point2(p[0], p[1])) ? 1.0 : 0.0;
  }
  return grid;
}

}  // namespace ergsense
