#include "ergsense/information.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace ergsense;

namespace {

const SearchDomain kModel({1.0, 1.0}, 10, {-0.5, -0.5});
const SearchDomain kWorld({1.0, 1.0}, 10, {0.0, 0.0});

// Smooth field with a few random bumps in the model frame.
LikelihoodField bump_field(Rng& rng, int bumps = 3) {
  GridField g(kModel, 64, 0.02);
  for (int b = 0; b < bumps; ++b) {
    const double cx = -0.3 + 0.6 * uniform01(rng), cy = -0.3 + 0.6 * uniform01(rng);
    const double w = 0.004 + 0.01 * uniform01(rng);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      const Vec s = g.node(i);
      g.values[i] += 0.9 * std::exp(-((s[0] - cx) * (s[0] - cx) + (s[1] - cy) * (s[1] - cy)) / w);
    }
  }
  for (double& v : g.values) v = std::min(v, 0.999);
  return LikelihoodField(std::move(g), 1e-3);
}

ParticleSet cloud(const SE2& centre, double spread, std::size_t n, std::uint64_t seed) {
  ParticleSet ps;
  Rng rng(seed);
  for (std::size_t j = 0; j < n; ++j) {
    ps.thetas.push_back({centre.tx + spread * (2 * uniform01(rng) - 1), centre.ty + spread * (2 * uniform01(rng) - 1),
                         wrap_angle(centre.alpha + 5 * spread * (2 * uniform01(rng) - 1))});
    ps.weights.push_back(0.1 + uniform01(rng));
  }
  double total = 0.0;
  for (double w : ps.weights) total += w;
  for (double& w : ps.weights) w /= total;
  return ps;
}

double cofactor_det(const Eigen::Matrix3d& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

Point2 world_point(Rng& rng) { return {uniform01(rng), uniform01(rng)}; }

}  // namespace

TEST_CASE("pointwise Fisher information is a PSD rank-one outer product") {
  Rng rng(1);
  const auto f = bump_field(rng);
  for (int t = 0; t < 100; ++t) {
    const Vec s = ergsense::testing::random_point(kModel, rng);
    const Mat I = pointwise_fisher(f, s, 0.01);
    CHECK(I.rows() == 2);
    CHECK((I - I.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(I);
    const Vec ev = es.eigenvalues();
    CHECK(ev.minCoeff() >= -1e-10 * std::max(1.0, ev.maxCoeff()));
    CHECK(std::abs(ev[0]) <= 1e-10 * std::max(1.0, ev[1]));
    const Vec g = f.spatial_gradient(s);
    CHECK(ev[1] == doctest::Approx(g.squaredNorm() / 0.01).epsilon(1e-10));
  }
  const auto flat = LikelihoodField::constant(kModel, 32, 0.4, 1e-3);
  CHECK(pointwise_fisher(flat, Vec::Zero(2), 0.01).norm() == 0.0);
}

TEST_CASE("single identity particle reproduces J^T I J") {
  Rng rng(2);
  const auto f = bump_field(rng);
  ParticleSet one;
  one.thetas = {SE2{}};
  one.weights = {1.0};
  for (int t = 0; t < 30; ++t) {
    const Vec s = ergsense::testing::random_point(kModel, rng);
    const Point2 p(s[0], s[1]);
    const Eigen::Matrix<double, 2, 3> J = se2_jacobian(SE2{}, p);
    const Mat expect = J.transpose() * pointwise_fisher(f, s, 0.01) * J;
    const Eigen::Matrix3d got = transform_information(f, one, p, 0.01);
    CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("determinant matches a cofactor expansion and is nonnegative") {
  Rng rng(3);
  const auto f = bump_field(rng);
  const auto ps = cloud({0.5, 0.5, 0.3}, 0.2, 40, 8);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Matrix3d m = transform_information(f, ps, world_point(rng), 0.01);
    const double scale = std::pow(std::max(1.0, m.cwiseAbs().maxCoeff()), 3);
    CHECK(std::abs(m.determinant() - cofactor_det(m)) <= 1e-12 * scale);
    CHECK(m.determinant() >= -1e-12 * scale);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("EID determinants are nonnegative across random field and particle pairs") {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto f = bump_field(rng, 1 + t % 4);
    const SE2 c{0.3 + 0.4 * uniform01(rng), 0.3 + 0.4 * uniform01(rng), kPi * (2 * uniform01(rng) - 1)};
    const auto ps = cloud(c, 0.05 + 0.2 * uniform01(rng), 500, 100 + t);
    const auto det = information_determinant(f, ps, kWorld, {});
    CHECK(det.sizes == std::vector<int>{48, 48});
    for (double v : det.values) CHECK(v >= -1e-12);
  }
}

TEST_CASE("constant field yields a uniform fallback target") {
  auto basis = make_basis(kWorld);
  const auto flat = LikelihoodField::constant(kModel, 32, 0.5, 1e-3);
  const auto r = expected_information(basis, flat, cloud({0.5, 0.5, 0.0}, 0.1, 20, 1), {});
  CHECK(r.degenerate);
  CHECK(r.target.phi.values[0] == doctest::Approx(1.0));
  for (Eigen::Index k = 1; k < r.target.phi.values.size(); ++k) CHECK(std::abs(r.target.phi.values[k]) < 1e-12);
}

TEST_CASE("structured field produces a normalized non-degenerate target") {
  Rng rng(5);
  auto basis = make_basis(kWorld);
  const auto r = expected_information(basis, bump_field(rng), cloud({0.5, 0.5, 0.0}, 0.1, 300, 2), {});
  CHECK_FALSE(r.degenerate);
  CHECK(r.target.density.integrate() == doctest::Approx(1.0).epsilon(1e-6));
  for (double v : r.target.density.values) CHECK(v > 0.0);
}

TEST_CASE("translating every particle translates the information field") {
  Rng rng(6);
  const auto f = bump_field(rng);
  const auto base = cloud({0.4, 0.45, 0.7}, 0.1, 60, 3);
  const Point2 shift(0.07, -0.04);
  ParticleSet moved = base;
  for (auto& th : moved.thetas) {
    th.tx += shift.x();
    th.ty += shift.y();
  }
  for (int t = 0; t < 50; ++t) {
    const Point2 s = world_point(rng);
    const Eigen::Matrix3d a = transform_information(f, base, s, 0.01);
    const Eigen::Matrix3d b = transform_information(f, moved, s + shift, 0.01);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, a.cwiseAbs().maxCoeff()));
    CHECK(std::abs(a.determinant() - b.determinant()) <= 1e-6 * std::max(1.0, std::abs(a.determinant())));
  }
}

TEST_CASE("a collapsing particle cloud converges to the point-mass information") {
  Rng rng(7);
  const auto f = bump_field(rng);
  const SE2 c{0.5, 0.5, 0.4};
  ParticleSet point;
  point.thetas = {c};
  point.weights = {1.0};
  std::vector<Point2> probes;
  for (int t = 0; t < 30; ++t) probes.push_back(world_point(rng));
  auto gap = [&](double spread) {
    const auto ps = cloud(c, spread, 50, 11);
    double worst = 0.0;
    for (const auto& s : probes)
      worst = std::max(worst, (transform_information(f, ps, s, 0.01) - transform_information(f, point, s, 0.01))
                                  .cwiseAbs()
                                  .maxCoeff());
    return worst;
  };
  const double g1 = gap(1e-2), g2 = gap(1e-4), g3 = gap(1e-7);
  CHECK(g2 < g1);
  CHECK(g3 < g2);
  CHECK(g3 < 1e-3);
}

TEST_CASE("pullbacks outside the model domain contribute nothing") {
  Rng rng(8);
  const auto f = bump_field(rng);
  ParticleSet far;
  far.thetas = {SE2{5.0, 5.0, 0.0}};
  far.weights = {1.0};
  CHECK(transform_information(f, far, {0.5, 0.5}, 0.01).norm() == 0.0);
}

TEST_CASE("EID configuration is validated") {
  EIDConfig c;
  c.sigma = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.grid_resolution = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  Rng rng(9);
  CHECK_THROWS_AS(information_determinant(bump_field(rng), ParticleSet{}, kWorld, {}), DegenerateError);
}
