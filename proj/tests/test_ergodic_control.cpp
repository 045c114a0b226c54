#include "ergsense/ergodic_control.hpp"
#include "ergsense/environment.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace ergsense;

namespace {

TargetDistribution bump_target(const BasisPtr& basis, double cx, double cy, double width) {
  GridField g(basis->domain(), 64, 0.0);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const Vec s = g.node(i);
    g.values[i] = 0.05 + std::exp(-((s[0] - cx) * (s[0] - cx) + (s[1] - cy) * (s[1] - cy)) / width);
  }
  return distribution_coefficients(basis, g);
}

struct Setup {
  ModelPtr model = double_integrator(2);
  BasisPtr basis = make_basis(SearchDomain::unit(2));
};

// Random interior state, random history and random smooth target.
struct Scenario {
  Vec x;
  TargetDistribution target;
  ErgodicController controller;
};

Scenario random_scenario(const Setup& s, Rng& rng, ErgodicControllerConfig cfg = {}) {
  auto target = bump_target(s.basis, 0.2 + 0.6 * uniform01(rng), 0.2 + 0.6 * uniform01(rng),
                            0.01 + 0.03 * uniform01(rng));
  ErgodicController ctl(s.model, s.basis, cfg);
  Vec h = Vec::Zero(4);
  for (int i = 0; i < 100; ++i) {
    h[0] = 0.1 + 0.8 * uniform01(rng);
    h[1] = 0.1 + 0.8 * uniform01(rng);
    ctl.record(-1.0 + 0.01 * i, h);
  }
  Vec x(4);
  x << 0.3 + 0.4 * uniform01(rng), 0.3 + 0.4 * uniform01(rng), 0.4 * uniform01(rng) - 0.2,
      0.4 * uniform01(rng) - 0.2;
  return {x, std::move(target), std::move(ctl)};
}

}  // namespace

TEST_CASE("prediction under zero control from rest is stationary with 101 samples per second") {
  auto m = double_integrator(2);
  Vec x(4);
  x << 0.3, 0.7, 0.0, 0.0;
  const auto traj = simulate_forward(*m, x, 2.0, 1.0, 0.01, Vec::Zero(2));
  CHECK(traj.size() == 101);
  for (const auto& xs : traj.states) CHECK(xs == x);
  const auto direct = integrate(*m, x, [](double) { return Vec::Zero(2); }, 2.0, 1.0, 0.01);
  CHECK(direct.states.back() == traj.states.back());
}

TEST_CASE("blended coefficients of equal stationary segments average the two points") {
  Setup s;
  Vec a(4), b(4);
  a << 0.2, 0.3, 0, 0;
  b << 0.7, 0.6, 0, 0;
  Trajectory history;
  for (int i = 0; i < 50; ++i) history.push_back(-0.5 + 0.01 * i, a, Vec::Zero(2));
  const auto predicted = simulate_forward(*s.model, b, 0.0, 0.5, 0.01, Vec::Zero(2));
  const auto blended = blended_coefficients(s.basis, s.model->search_indices(), history, predicted,
                                            std::numeric_limits<double>::infinity());
  CHECK(blended.duration == doctest::Approx(1.0));
  for (std::size_t k = 0; k < s.basis->size(); ++k) {
    const double expect = 0.5 * (basis_eval(s.basis->domain(), s.basis->indices()[k], a.head(2)) +
                                 basis_eval(s.basis->domain(), s.basis->indices()[k], b.head(2)));
    CHECK(blended.coeffs.values[static_cast<Eigen::Index>(k)] == doctest::Approx(expect).epsilon(1e-12));
  }

  // The controller's incremental history reaches the same numbers.
  ErgodicController ctl(s.model, s.basis, {});
  for (std::size_t j = 0; j < history.size(); ++j) ctl.record(history.times[j], history.states[j]);
  const auto inc = ctl.blend(predicted, 0.0);
  CHECK((inc.coeffs.values - blended.coeffs.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("empty history or zero window leaves only the prediction") {
  Setup s;
  Vec b(4);
  b << 0.7, 0.6, 0.1, -0.2;
  Trajectory history;
  for (int i = 0; i < 20; ++i) history.push_back(-0.2 + 0.01 * i, Vec::Constant(4, 0.3), Vec::Zero(2));
  const auto predicted = simulate_forward(*s.model, b, 0.0, 0.5, 0.01, Vec::Zero(2));
  const auto alone = blended_coefficients(s.basis, s.model->search_indices(), {}, predicted, 1.0);
  const auto windowed = blended_coefficients(s.basis, s.model->search_indices(), history, predicted, 0.0);
  CHECK((alone.coeffs.values - windowed.coeffs.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(blended_coefficients(s.basis, s.model->search_indices(), {}, {}, 1.0), DegenerateError);
}

TEST_CASE("adjoint vanishes with zero forcing") {
  Setup s;
  Vec x(4);
  x << 0.4, 0.5, 0.2, 0.1;
  const auto predicted = simulate_forward(*s.model, x, 0.0, 0.5, 0.01, Vec::Zero(2));
  const auto target = bump_target(s.basis, 0.5, 0.5, 0.02);
  const auto c = blended_coefficients(s.basis, s.model->search_indices(), {}, predicted, 1.0);

  SUBCASE("q = 0") {
    for (const auto& r : adjoint_backward(*s.model, predicted, c.coeffs, target, 0.0, c.duration))
      CHECK(r.norm() == 0.0);
  }
  SUBCASE("c = phi") {
    TargetDistribution matched = target;
    matched.phi = c.coeffs;
    const auto rho = adjoint_backward(*s.model, predicted, c.coeffs, matched, 1.0, c.duration);
    CHECK(rho.size() == predicted.size());
    for (const auto& r : rho) CHECK(r.norm() == 0.0);
  }
}

TEST_CASE("already-ergodic state returns the default control") {
  Setup s;
  ErgodicController ctl(s.model, s.basis, {});
  Vec x(4);
  x << 0.4, 0.5, 0.0, 0.0;
  const auto predicted = ctl.rollout(x, 0.0, std::nullopt);
  TargetDistribution matched = uniform_target(s.basis, 16);
  matched.phi = ctl.blend(predicted, 0.0).coeffs;
  const auto a = ctl.plan(x, 0.0, matched);
  CHECK(a.u_star.norm() == 0.0);
  CHECK_FALSE(a.descent);
  CHECK(a.lambda == doctest::Approx(ctl.config().lambda_min));
}

TEST_CASE("mode insertion gradient matches a finite difference of the horizon metric") {
  Setup s;
  Rng rng(20240);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    auto sc = random_scenario(s, rng);
    const auto predicted = sc.controller.rollout(sc.x, 0.0, std::nullopt);
    const auto blended = sc.controller.blend(predicted, 0.0);
    const auto rho = adjoint_backward(*s.model, predicted, blended.coeffs, sc.target, 1.0, blended.duration);
    const auto j = 1 + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(predicted.size() - 3));
    Vec du(2);
    du << 2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0;
    const double mig = rho[j].dot(s.model->f(predicted.states[j], du) - s.model->f(predicted.states[j], Vec::Zero(2)));
    ControlAction a;
    a.u_star = du;
    a.tau = predicted.times[j];
    a.lambda = 1e-4;
    const double e0 = sc.controller.horizon_metric(sc.x, 0.0, sc.target, std::nullopt);
    const double fd = (sc.controller.horizon_metric(sc.x, 0.0, sc.target, a) - e0) / a.lambda;
    worst = std::max(worst, std::abs(mig - fd) / std::abs(fd));
  }
  MESSAGE("worst relative error ", worst);
  CHECK(worst < 0.01);
}

TEST_CASE("chosen tau minimizes the mode insertion gradient over the horizon") {
  Setup s;
  Rng rng(77);
  for (int t = 0; t < 10; ++t) {
    auto sc = random_scenario(s, rng);
    const auto a = sc.controller.plan(sc.x, 0.0, sc.target);
    if (!a.descent) continue;
    const auto predicted = sc.controller.rollout(sc.x, 0.0, std::nullopt);
    const auto blended = sc.controller.blend(predicted, 0.0);
    const auto rho = adjoint_backward(*s.model, predicted, blended.coeffs, sc.target, 1.0, blended.duration);
    const Mat R = 0.01 * Mat::Identity(2, 2);
    double best = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    for (std::size_t j = 0; j < predicted.size(); ++j) {
      // Control law with u_def = 0: u* = (Omega + R)^-1 h^T rho alpha_d.
      const Vec hr = s.model->input_map(predicted.states[j]).transpose() * rho[j];
      const Vec u = (hr * hr.transpose() + R).inverse() * hr * -20.0;
      const double mig = hr.dot(u);
      if (mig < best) {
        best = mig;
        best_t = predicted.times[j];
      }
    }
    CHECK(a.tau == doctest::Approx(best_t));
    CHECK(a.mode_insertion_gradient == doctest::Approx(best).epsilon(1e-9));
    CHECK(a.mode_insertion_gradient <= 0.0);
  }
}

TEST_CASE("line search descends in at least 95 of 100 random invocations") {
  Setup s;
  Rng rng(5150);
  int descents = 0;
  for (int t = 0; t < 100; ++t) {
    auto sc = random_scenario(s, rng);
    const auto a = sc.controller.plan(sc.x, 0.0, sc.target);
    CHECK(a.lambda >= sc.controller.config().lambda_min - 1e-12);
    CHECK(a.lambda <= sc.controller.config().horizon);
    CHECK(a.tau >= 0.0);
    CHECK(a.tau <= sc.controller.config().horizon + 1e-12);
    if (a.descent && a.metric_applied <= a.metric_default) ++descents;
  }
  CHECK(descents >= 95);
}

TEST_CASE("emitted controls are clipped to the bounds") {
  Setup s;
  ErgodicControllerConfig cfg;
  cfg.alpha_d = -2000.0;
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    auto sc = random_scenario(s, rng, cfg);
    const auto a = sc.controller.plan(sc.x, 0.0, sc.target);
    CHECK(a.u_star.cwiseAbs().maxCoeff() <= 10.0);
    CHECK(a.u_star == s.model->saturate(a.u_star));
  }
}

TEST_CASE("first action from near rest on a uniform target is nonzero and descends") {
  Setup s;
  const auto target = uniform_target(s.basis, 64);
  Vec x(4);
  x << 0.47, 0.53, 0.0, 0.0;
  const auto a = compute_action(s.model, s.basis, {}, x, 0.0, {}, target);
  CHECK(a.u_star.norm() > 0.0);
  CHECK(a.descent);
  CHECK(a.metric_applied < a.metric_default);
}

TEST_CASE("invalid controller configurations are rejected") {
  Setup s;
  auto make = [&](auto edit) {
    ErgodicControllerConfig c;
    edit(c);
    return ErgodicController(s.model, s.basis, c);
  };
  CHECK_THROWS_AS(make([](auto& c) { c.horizon = 0.0; }), ConfigError);
  CHECK_THROWS_AS(make([](auto& c) { c.alpha_d = 1.0; }), ConfigError);
  CHECK_THROWS_AS(make([](auto& c) { c.history_window = -1.0; }), ConfigError);
  CHECK_THROWS_AS(make([](auto& c) {
                    c.R = Mat::Identity(2, 2);
                    c.R(0, 1) = 0.5;
                  }),
                  ConfigError);
  CHECK_THROWS_AS(make([](auto& c) { c.R = -Mat::Identity(2, 2); }), ConfigError);
  CHECK_THROWS_AS(ErgodicController(double_integrator(3), s.basis, {}), ConfigError);
}

TEST_CASE("history window integrals match a direct sum") {
  Setup s;
  HistoryCoefficients hist(s.basis);
  Rng rng(4);
  std::vector<Vec> pts;
  for (int i = 0; i < 30; ++i) {
    pts.push_back(ergsense::testing::random_point(s.basis->domain(), rng));
    hist.append(0.1 * i, pts.back());
  }
  const auto w = hist.window_integral(3.0, 1.05);
  // Samples at t >= 1.95 are 20..29, each lasting 0.1 s (the last until 3.0).
  Vec expect = Vec::Zero(static_cast<Eigen::Index>(s.basis->size()));
  for (int i = 20; i < 30; ++i)
    for (std::size_t k = 0; k < s.basis->size(); ++k)
      expect[static_cast<Eigen::Index>(k)] += 0.1 * basis_eval(s.basis->domain(), s.basis->indices()[k], pts[static_cast<std::size_t>(i)]);
  CHECK(w.duration == doctest::Approx(1.0));
  CHECK((w.integral - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(hist.append(1.0, pts[0]), ConfigError);
}
