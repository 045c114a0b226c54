#include "ergsense/likelihood.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace ergsense;

namespace {

MeasurementLog scene_log(const Scene& scene, int n, double flip, std::uint64_t seed) {
  MeasurementLog log;
  Rng rng(seed);
  ContactSensorConfig sensor = scene.sensor;
  sensor.flip_noise = flip;
  for (int i = 0; i < n; ++i) {
    const Vec s = ergsense::testing::random_point(scene.model_domain, rng);
    log.append(0.1 * i, s, sense(scene, SE2{}, sensor, Point2(s[0], s[1]), rng));
  }
  return log;
}

MeasurementLog bump_log() {
  MeasurementLog log;
  Vec s(2);
  s << 0.5, 0.5;
  log.append(0.0, s, 1);
  s << 0.52, 0.48;
  log.append(0.1, s, 1);
  for (int i = 0; i < 8; ++i) {
    const double a = 2.0 * kPi * i / 8.0;
    s << 0.5 + 0.3 * std::cos(a), 0.5 + 0.3 * std::sin(a);
    log.append(0.2 + 0.1 * i, s, 0);
  }
  return log;
}

}  // namespace

TEST_CASE("all-negative log gives the floor everywhere") {
  MeasurementLog log;
  for (int i = 0; i < 10; ++i) log.append(0.1 * i, Vec::Constant(2, 0.1 * i), 0);
  const auto f = fit(log, SearchDomain::unit(2), {});
  for (double v : f.grid().values) CHECK(v == 1e-3);
  CHECK(f.grid().sizes == std::vector<int>{64, 64});
}

TEST_CASE("all-positive log gives the ceiling everywhere") {
  MeasurementLog log;
  log.append(0.0, Vec::Constant(2, 0.5), 1);
  const auto f = fit(log, SearchDomain::unit(2), {});
  for (double v : f.grid().values) CHECK(v == 1.0 - 1e-3);
}

TEST_CASE("empty log is rejected") {
  CHECK_THROWS_AS(fit(MeasurementLog{}, SearchDomain::unit(2), {}), DegenerateError);
}

TEST_CASE("a positive sample raises probability locally") {
  const auto f = fit(bump_log(), SearchDomain::unit(2), {});
  CHECK(f.query(Vec::Constant(2, 0.5)) > 0.5);
  CHECK(f.query(Vec::Constant(2, 0.05)) < 0.5);
  CHECK(f.query(Vec::Constant(2, 0.5)) > f.query(Vec::Constant(2, 0.7)));
}

TEST_CASE("500 noiseless samples on the default scene reach AUC 0.95") {
  const Scene scene = default_scene();
  const auto f = fit(scene_log(scene, 500, 0.0, 3), scene.model_domain, {});
  const double a = field_auc(f, scene, SE2{});
  MESSAGE("AUC ", a);
  CHECK(a >= 0.95);
}

TEST_CASE("AUC does not degrade as samples accumulate") {
  const Scene scene = default_scene();
  const auto log = scene_log(scene, 1000, scene.sensor.flip_noise, 17);
  MeasurementLog partial;
  double prev = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& m = log.samples()[i];
    partial.append(m.t, m.x, m.y);
    if ((i + 1) % 100 != 0) continue;
    const auto f = fit(partial, scene.model_domain, {});
    const double a = partial.positives() > 0 ? field_auc(f, scene, SE2{}) : 0.5;
    CHECK(a >= prev - 0.02);
    prev = std::max(prev, a);
  }
  CHECK(prev >= 0.9);
}

TEST_CASE("field queries and bounds") {
  const Scene scene = default_scene();
  const auto f = fit(scene_log(scene, 300, 0.05, 9), scene.model_domain, {});
  for (double v : f.grid().values) {
    CHECK(v >= 1e-3);
    CHECK(v <= 1.0 - 1e-3);
  }
  for (std::size_t i = 0; i < f.grid().num_nodes(); i += 37) CHECK(f.query(f.grid().node(i)) == f.grid().values[i]);
  Vec far(2);
  far << 3.0, 0.0;
  const auto q = f.query_flagged(far);
  CHECK(q.clamped);
  Vec edge(2);
  edge << 0.5, 0.0;
  CHECK(q.p == f.query(edge));
  CHECK_FALSE(f.query_flagged(Vec::Zero(2)).clamped);
}

TEST_CASE("refitting the same log is bit-identical") {
  const Scene scene = default_scene();
  LikelihoodConfig cfg;
  cfg.max_training = 150;
  const auto log = scene_log(scene, 400, 0.05, 4);
  const auto a = fit(log, scene.model_domain, cfg);
  const auto b = fit(log, scene.model_domain, cfg);
  CHECK(a.grid().values == b.grid().values);
}

TEST_CASE("constant field has zero gradient") {
  const auto f = LikelihoodField::constant(SearchDomain::unit(2), 32, 0.3, 1e-3);
  Rng rng(1);
  for (int t = 0; t < 20; ++t) CHECK(f.spatial_gradient(ergsense::testing::random_point(f.domain(), rng)).norm() < 1e-12);
}

TEST_CASE("grid gradient of a fitted bump matches a 4x finer grid") {
  const auto log = bump_log();
  const LikelihoodConfig cfg;
  const auto field = fit(log, SearchDomain::unit(2), cfg);
  LikelihoodConfig fine_cfg = cfg;
  fine_cfg.grid_resolution = 4 * (field.grid().sizes[0] - 1) + 1;
  const auto fine = fit(log, SearchDomain::unit(2), fine_cfg);
  REQUIRE(fine.grid().spacing(0) == doctest::Approx(field.grid().spacing(0) / 4.0));

  // Field-level relative L2 error over interior coarse nodes.
  const GridField& g = field.grid();
  double err2 = 0.0, ref2 = 0.0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const Vec s = g.node(i);
    if (!SearchDomain({0.9, 0.9}, 1, {0.05, 0.05}).contains(s)) continue;
    const Vec want = fine.spatial_gradient(s);
    err2 += (field.spatial_gradient(s) - want).squaredNorm();
    ref2 += want.squaredNorm();
  }
  const double rel = std::sqrt(err2 / ref2);
  MESSAGE("relative gradient error ", rel);
  CHECK(ref2 > 0.0);
  CHECK(rel <= 0.05);
}

TEST_CASE("stage-1 target is uniform before contact and peaks at a bump") {
  auto basis = make_basis(SearchDomain::unit(2));
  const auto flat = stage1_target(basis, LikelihoodField::constant(SearchDomain::unit(2), 64, 1e-3, 1e-3));
  CHECK(flat.phi.values[0] == doctest::Approx(1.0));
  for (Eigen::Index k = 1; k < flat.phi.values.size(); ++k) CHECK(std::abs(flat.phi.values[k]) < 1e-12);

  const auto bump = stage1_target(basis, fit(bump_log(), SearchDomain::unit(2), {}));
  CHECK(bump.density.integrate() == doctest::Approx(1.0).epsilon(1e-6));
  std::size_t arg = 0;
  for (std::size_t i = 0; i < bump.density.num_nodes(); ++i)
    if (bump.density.values[i] > bump.density.values[arg]) arg = i;
  CHECK((bump.density.node(arg) - Vec::Constant(2, 0.5)).norm() < 0.05);
}

TEST_CASE("ground-truth field encodes the flip rate") {
  const Scene scene = default_scene();
  const auto f = ground_truth_field(scene, 64, 1e-3);
  for (std::size_t i = 0; i < f.grid().num_nodes(); ++i) {
    const Vec s = f.grid().node(i);
    CHECK(f.grid().values[i] == (occupancy(scene, {}, Point2(s[0], s[1])) ? 0.95 : 0.05));
  }
  CHECK(field_auc(f, scene, {}) == 1.0);
}

TEST_CASE("AUC against brute-force pair counting") {
  Rng rng(6);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 300; ++i) {
    scores.push_back(std::floor(uniform01(rng) * 20.0));
    labels.push_back(uniform01(rng) < 0.3 ? 1 : 0);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (labels[i] == 1 && labels[j] == 0) {
        den += 1.0;
        num += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
      }
  CHECK(auc(scores, labels) == doctest::Approx(num / den).epsilon(1e-12));
  const std::vector<int> one_class(scores.size(), 0);
  CHECK_THROWS_AS(auc(scores, one_class), DegenerateError);
}
