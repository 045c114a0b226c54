#include "ergsense/baseline_eer.hpp"

#include <doctest.h>

#include <cmath>

using namespace ergsense;

namespace {

const SearchDomain kModel({1.0, 1.0}, 4, {-0.5, -0.5});

// Circle at the model origin with a sharp (noise-free) ground-truth field.
LikelihoodField disc_field() {
  Scene scene;
  scene.shapes = {Shape::circle({0.0, 0.0}, 0.15)};
  scene.model_domain = kModel;
  scene.world_domain = SearchDomain::unit(2);
  scene.sensor.flip_noise = 0.0;
  return ground_truth_field(scene, 64, 1e-3);
}

// Plain fixed-point Riccati iteration, the slow but obvious route.
Mat riccati_iteration(const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
  Mat P = Q;
  for (int i = 0; i < 200000; ++i) {
    const Mat S = R + B.transpose() * P * B;
    const Mat next = A.transpose() * P * A - A.transpose() * P * B * S.inverse() * B.transpose() * P * A + Q;
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (change < 1e-14 * std::max(1.0, P.cwiseAbs().maxCoeff())) break;
  }
  return P;
}

}  // namespace

TEST_CASE("entropy examples") {
  std::vector<double> u(8, 1.0 / 8.0);
  CHECK(entropy(u) == doctest::Approx(std::log(8.0)));
  const std::vector<double> point{0.0, 1.0, 0.0};
  CHECK(entropy(point) == 0.0);
  const std::vector<double> two{0.3, 0.7};
  CHECK(std::abs(entropy(two) - 0.6109) < 1e-4);
  CHECK(bernoulli_entropy(0.5) == doctest::Approx(std::log(2.0)));
  CHECK(bernoulli_entropy(0.0) == 0.0);
  CHECK(bernoulli_entropy(1.0) == 0.0);
  CHECK(bernoulli_entropy(0.3) == doctest::Approx(entropy(two)));
}

TEST_CASE("point-mass belief gains nothing and keeps the first candidate") {
  const auto field = disc_field();
  ParticleSet ps;
  ps.thetas = {SE2{0.5, 0.5, 0.0}};
  ps.weights = {1.0};
  std::vector<Vec> cands;
  for (int i = 0; i < 10; ++i) cands.push_back(Vec::Constant(2, 0.1 * i));
  const auto sc = score_localization(ps, field, cands, 0.01);
  for (double r : sc.reduction) CHECK(std::abs(r) < 1e-12);
  CHECK(sc.best == 0);
}

TEST_CASE("a discriminating candidate dominates an uninformative one") {
  const auto field = disc_field();
  // Two hypotheses: object centred at (0.3, 0.5) or at (0.7, 0.5).
  ParticleSet ps;
  ps.thetas = {SE2{0.3, 0.5, 0.0}, SE2{0.7, 0.5, 0.0}};
  ps.weights = {0.5, 0.5};
  Vec free_space(2), discriminating(2);
  free_space << 0.5, 0.05;       // both predict y = 0
  discriminating << 0.3, 0.5;    // only the first predicts y = 1
  const std::vector<Vec> cands{free_space, discriminating};
  const auto sc = score_localization(ps, field, cands, 0.01);
  CHECK(sc.best == 1);
  CHECK(sc.reduction[1] > sc.reduction[0]);
  // p(y = 1) = 0.5 and both outcomes nearly resolve the belief.
  const double l = 0.99;
  const double post = entropy(std::vector<double>{l / (l + 0.01), 0.01 / (l + 0.01)});
  CHECK(sc.reduction[1] == doctest::Approx(std::log(2.0) - post).epsilon(1e-6));
  CHECK(std::abs(sc.reduction[0]) < 1e-12);
}

TEST_CASE("stage-1 selection is the brute-force Bernoulli entropy argmax") {
  GridField g(kModel, 64, 0.0);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const Vec s = g.node(i);
    g.values[i] = 1.0 / (1.0 + std::exp(-20.0 * (s[0] + 0.3 * s[1])));
  }
  const LikelihoodField field(g, 1e-3);
  Rng rng(5);
  const auto cands = draw_candidates(kModel, 200, rng);
  const auto sc = score_exploration(field, cands);
  std::size_t best = 0;
  double best_h = -1.0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double p = field.query(cands[i]);
    const double h = -p * std::log(p) - (1 - p) * std::log(1 - p);
    if (h > best_h) {
      best_h = h;
      best = i;
    }
  }
  CHECK(sc.best == best);
  CHECK(sc.reduction[best] == doctest::Approx(best_h).epsilon(1e-12));
}

TEST_CASE("localization reductions are nonnegative and selection is deterministic") {
  const Scene scene = default_scene();
  const auto field = ground_truth_field(scene, 64, 1e-3);
  auto ps = init_uniform({}, 300, 3);
  Rng sense_rng(1);
  FilterConfig fc;
  for (int i = 0; i < 30; ++i) {
    const Point2 x(uniform01(sense_rng), uniform01(sense_rng));
    update(ps, field, x, sense(scene, scene.transform, scene.sensor, x, sense_rng), fc);
  }
  Rng a(9), b(9);
  const auto ca = draw_candidates(scene.world_domain, 200, a);
  const auto cb = draw_candidates(scene.world_domain, 200, b);
  CHECK(ca.size() == 200);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    CHECK(ca[i] == cb[i]);
    CHECK(scene.world_domain.contains(ca[i]));
  }
  const auto sc = score_localization(ps, field, ca, 0.01);
  for (double r : sc.reduction) CHECK(r >= -1e-12);
  Rng c(42), d(42);
  const EERConfig cfg;
  CHECK(select_target(ps, field, scene.world_domain, cfg, c) == select_target(ps, field, scene.world_domain, cfg, d));
  // Scoring must not touch the belief.
  const auto before = ps.weights;
  score_localization(ps, field, ca, 0.01);
  CHECK(ps.weights == before);
}

TEST_CASE("ZOH double integrator matrices") {
  Mat A, B;
  double_integrator_zoh(2, 0.1, A, B);
  CHECK(A.rows() == 4);
  CHECK(A(0, 2) == doctest::Approx(0.1));
  CHECK(B(0, 0) == doctest::Approx(0.005));
  CHECK(B(2, 0) == doctest::Approx(0.1));
  CHECK(B(1, 0) == 0.0);
}

TEST_CASE("DARE solution and LQR gain match a fixed-point Riccati oracle") {
  const DoubleIntegrator model(2, 10.0);
  const EERConfig cfg;
  const LqrTracker lqr(model, cfg);
  Mat Q = Mat::Zero(4, 4);
  Q.diagonal() << 100, 100, 10, 10;
  const Mat R = Mat::Identity(2, 2);
  const Mat P = riccati_iteration(lqr.A(), lqr.B(), Q, R);
  CHECK((lqr.riccati() - P).cwiseAbs().maxCoeff() <= 1e-8 * P.cwiseAbs().maxCoeff());
  const Mat K = (R + lqr.B().transpose() * P * lqr.B()).inverse() * lqr.B().transpose() * P * lqr.A();
  CHECK((lqr.gain() - K).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("LQR is silent at the target and converges from rest") {
  const DoubleIntegrator model(2, 10.0);
  const EERConfig cfg;
  const LqrTracker lqr(model, cfg);
  Vec target(2);
  target << 0.8, 0.3;
  Vec at(4);
  at << 0.8, 0.3, 0.0, 0.0;
  CHECK(lqr.control(at, target).norm() == 0.0);

  Vec x(4);
  x << 0.1, 0.9, 0.0, 0.0;
  double reached = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec u = lqr.control(x, target);
    CHECK(u.cwiseAbs().maxCoeff() <= 10.0);
    x = lqr.A() * x + lqr.B() * u;
    if (reached < 0.0 && (x.head(2) - target).norm() < 0.01) reached = 0.01 * (i + 1);
  }
  CHECK(reached > 0.0);
  CHECK((x.head(2) - target).norm() < 0.01);
  MESSAGE("reached within 0.01 after ", reached, " s");
}

TEST_CASE("DARE fails loudly when no stabilizing solution exists") {
  // Unstable mode with no control authority.
  Mat A(1, 1), B(1, 1), Q(1, 1), R(1, 1);
  A << 2.0;
  B << 0.0;
  Q << 1.0;
  R << 1.0;
  CHECK_THROWS_AS(solve_dare(A, B, Q, R), NumericError);
}

TEST_CASE("EER configuration is validated") {
  EERConfig c;
  c.n_samples = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.r_control = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
