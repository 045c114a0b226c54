#include "ergsense/runner.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>
#include <set>

#ifndef ERGSENSE_VERSION
#define ERGSENSE_VERSION "unknown"
#endif

namespace ergsense {

namespace {

// Independent 64-bit streams from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kSensor = 1, kParticles = 2, kCandidates = 3, kStart = 4 };

// The centre of a box is a stationary point of the ergodic metric under a
// uniform target, so the default start is nudged off it.
constexpr double kStartOffset = 0.05;

// Number of simulation steps in `period`; throws unless it is a whole multiple of dt.
long ticks(double period, double dt, const char* what) {
  const long n = std::lround(period / dt);
  if (n < 1 || std::abs(static_cast<double>(n) * dt - period) > 1e-9 * std::max(1.0, period))
    throw ConfigError(std::string(what) + " must be a positive multiple of the simulation step");
  return n;
}

bool is_localization(Stage s) { return s == Stage::localize || s == Stage::eer_localize; }
bool is_eer(Stage s) { return s == Stage::eer_explore || s == Stage::eer_localize; }

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string snapshot_name(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snapshots/%s_%04zu.csv", prefix, i);
  return buf;
}

}  // namespace

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::explore: return "explore";
    case Stage::localize: return "localize";
    case Stage::eer_explore: return "eer-explore";
    case Stage::eer_localize: return "eer-localize";
  }
  return "explore";
}

Stage stage_from_string(const std::string& s) {
  if (s == "explore") return Stage::explore;
  if (s == "localize") return Stage::localize;
  if (s == "eer-explore") return Stage::eer_explore;
  if (s == "eer-localize") return Stage::eer_localize;
  throw ConfigError("unknown stage '" + s + "'");
}

void RunConfig::validate() const {
  scene.validate();
  if (!(t_f > 0.0) || !std::isfinite(t_f)) throw ConfigError("t_f must be positive");
  if (!(t_s > 0.0)) throw ConfigError("t_s must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  ticks(t_s, dt, "t_s");
  ticks(replan_period, dt, "replan_period");
  if (is_eer(stage)) ticks(eer.replan_period, dt, "eer.replan_period");
  if (snapshot_interval > 0.0) ticks(snapshot_interval, dt, "snapshot_interval");
  if (!(u_limit > 0.0)) throw ConfigError("u_limit must be positive");
  if (eid_every < 1) throw ConfigError("eid_every must be at least 1");
  if (ground_truth_resolution < 2) throw ConfigError("ground_truth_resolution must be at least 2");
  controller.validate(2);
  likelihood.validate();
  filter.validate();
  prior.validate();
  eid.validate();
  eer.validate();
  if (initial_state.size() != 0 && initial_state.size() != 4)
    throw ConfigError("initial_state must be (x, y, vx, vy)");
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  try {
    if (j.contains("stage")) c.stage = stage_from_string(j.at("stage").get<std::string>());
    if (j.contains("scene")) {
      const auto& s = j.at("scene");
      if (s.is_string()) {
        const auto path = resolve(base_dir, s.get<std::string>());
        c.scene = scene_from_json(read_json(path));
        c.scene_source = path.string();
      } else {
        c.scene = scene_from_json(s);
        c.scene_source = j.value("scene_source", std::string("inline"));
      }
    }
    c.t_s = c.scene.sensor.sample_period;
    c.t_f = j.value("t_f", c.t_f);
    c.t_s = j.value("t_s", c.t_s);
    c.dt = j.value("dt", c.dt);
    c.replan_period = j.value("replan_period", c.replan_period);
    c.snapshot_interval = j.value("snapshot_interval", c.snapshot_interval);
    c.seed = j.value("seed", c.seed);
    c.u_limit = j.value("u_limit", c.u_limit);
    if (j.contains("initial_state") && !j.at("initial_state").is_null())
      c.initial_state = vec_from_json(j.at("initial_state"));
    c.k_max = j.value("k_max", c.k_max);
    if (j.contains("field")) {
      const auto f = j.at("field").get<std::string>();
      c.field = f == "ground_truth" ? f : resolve(base_dir, f).string();
    }
    c.ground_truth_resolution = j.value("ground_truth_resolution", c.ground_truth_resolution);
    c.eid_every = j.value("eid_every", c.eid_every);
    c.compare_localize = j.value("compare_localize", c.compare_localize);
    c.write_artifacts = j.value("write_artifacts", c.write_artifacts);
    c.out_dir = j.value("out_dir", c.out_dir);

    if (j.contains("controller")) {
      const auto& k = j.at("controller");
      auto& cc = c.controller;
      cc.horizon = k.value("horizon", cc.horizon);
      cc.dt = k.value("dt", cc.dt);
      cc.q = k.value("q", cc.q);
      if (k.contains("R")) cc.R = vec_from_json(k.at("R")).asDiagonal();
      cc.alpha_d = k.value("alpha_d", cc.alpha_d);
      if (k.contains("u_def")) cc.u_def = vec_from_json(k.at("u_def"));
      if (k.contains("history_window"))
        cc.history_window = k.at("history_window").is_null() ? std::numeric_limits<double>::infinity()
                                                             : k.at("history_window").get<double>();
      cc.lambda_init_fraction = k.value("lambda_init_fraction", cc.lambda_init_fraction);
      cc.lambda_shrink = k.value("lambda_shrink", cc.lambda_shrink);
      cc.max_line_search = k.value("max_line_search", cc.max_line_search);
      cc.lambda_min = k.value("lambda_min", cc.lambda_min);
    }
    if (j.contains("likelihood")) {
      const auto& k = j.at("likelihood");
      auto& lc = c.likelihood;
      lc.kernel_variance = k.value("kernel_variance", lc.kernel_variance);
      lc.ridge = k.value("ridge", lc.ridge);
      lc.grid_resolution = k.value("grid_resolution", lc.grid_resolution);
      lc.prob_floor = k.value("prob_floor", lc.prob_floor);
      lc.max_training = k.value("max_training", lc.max_training);
      lc.refit_every = k.value("refit_every", lc.refit_every);
      lc.max_newton = k.value("max_newton", lc.max_newton);
      lc.tolerance = k.value("tolerance", lc.tolerance);
    }
    if (j.contains("filter")) {
      const auto& k = j.at("filter");
      auto& fc = c.filter;
      fc.num_particles = k.value("num_particles", fc.num_particles);
      fc.ess_fraction = k.value("ess_fraction", fc.ess_fraction);
      if (k.contains("jitter")) fc.jitter = k.at("jitter").get<std::array<double, 3>>();
      fc.jitter_anneal = k.value("jitter_anneal", fc.jitter_anneal);
      fc.likelihood_floor = k.value("likelihood_floor", fc.likelihood_floor);
      fc.regularization = k.value("regularization", fc.regularization);
      fc.move_steps = k.value("move_steps", fc.move_steps);
      fc.global_move_fraction = k.value("global_move_fraction", fc.global_move_fraction);
    }
    if (j.contains("prior")) {
      const auto& k = j.at("prior");
      if (k.contains("lo")) c.prior.lo = k.at("lo").get<std::array<double, 3>>();
      if (k.contains("hi")) c.prior.hi = k.at("hi").get<std::array<double, 3>>();
    }
    if (j.contains("eid")) {
      const auto& k = j.at("eid");
      c.eid.sigma = k.value("sigma", c.eid.sigma);
      c.eid.grid_resolution = k.value("grid_resolution", c.eid.grid_resolution);
      c.eid.det_floor = k.value("det_floor", c.eid.det_floor);
      c.eid.max_particles = k.value("max_particles", c.eid.max_particles);
    }
    if (j.contains("eer")) {
      const auto& k = j.at("eer");
      c.eer.n_samples = k.value("n_samples", c.eer.n_samples);
      c.eer.q_position = k.value("q_position", c.eer.q_position);
      c.eer.q_velocity = k.value("q_velocity", c.eer.q_velocity);
      c.eer.r_control = k.value("r_control", c.eer.r_control);
      c.eer.replan_period = k.value("replan_period", c.eer.replan_period);
      c.eer.likelihood_floor = k.value("likelihood_floor", c.eer.likelihood_floor);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.eer.dt = c.dt;
  return c;
}

RunConfig load_config(const fs::path& path) {
  return config_from_json(read_json(path), path.parent_path());
}

json to_json(const RunConfig& c) {
  const Mat R = c.controller.control_weight(2);
  return {
      {"stage", to_string(c.stage)},
      {"scene", to_json(c.scene)},
      {"scene_source", c.scene_source},
      {"t_f", c.t_f},
      {"t_s", c.t_s},
      {"dt", c.dt},
      {"replan_period", c.replan_period},
      {"snapshot_interval", c.snapshot_interval},
      {"seed", c.seed},
      {"u_limit", c.u_limit},
      {"initial_state", c.initial_state.size() ? vec_json(c.initial_state) : json(nullptr)},
      {"k_max", c.k_max},
      {"field", c.field},
      {"ground_truth_resolution", c.ground_truth_resolution},
      {"eid_every", c.eid_every},
      {"compare_localize", c.compare_localize},
      {"write_artifacts", c.write_artifacts},
      {"out_dir", c.out_dir},
      {"controller",
       {{"horizon", c.controller.horizon},
        {"dt", c.controller.dt},
        {"q", c.controller.q},
        {"R", vec_json(R.diagonal())},
        {"alpha_d", c.controller.alpha_d},
        {"u_def", vec_json(c.controller.default_control(2))},
        {"history_window",
         std::isfinite(c.controller.history_window) ? json(c.controller.history_window) : json(nullptr)},
        {"lambda_init_fraction", c.controller.lambda_init_fraction},
        {"lambda_shrink", c.controller.lambda_shrink},
        {"max_line_search", c.controller.max_line_search},
        {"lambda_min", c.controller.lambda_min}}},
      {"likelihood",
       {{"kernel_variance", c.likelihood.kernel_variance},
        {"ridge", c.likelihood.ridge},
        {"grid_resolution", c.likelihood.grid_resolution},
        {"prob_floor", c.likelihood.prob_floor},
        {"max_training", c.likelihood.max_training},
        {"refit_every", c.likelihood.refit_every},
        {"max_newton", c.likelihood.max_newton},
        {"tolerance", c.likelihood.tolerance}}},
      {"filter",
       {{"num_particles", c.filter.num_particles},
        {"ess_fraction", c.filter.ess_fraction},
        {"jitter", c.filter.jitter},
        {"jitter_anneal", c.filter.jitter_anneal},
        {"likelihood_floor", c.filter.likelihood_floor},
        {"regularization", c.filter.regularization},
        {"move_steps", c.filter.move_steps},
        {"global_move_fraction", c.filter.global_move_fraction}}},
      {"prior", {{"lo", c.prior.lo}, {"hi", c.prior.hi}}},
      {"eid",
       {{"sigma", c.eid.sigma},
        {"grid_resolution", c.eid.grid_resolution},
        {"det_floor", c.eid.det_floor},
        {"max_particles", c.eid.max_particles}}},
      {"eer",
       {{"n_samples", c.eer.n_samples},
        {"q_position", c.eer.q_position},
        {"q_velocity", c.eer.q_velocity},
        {"r_control", c.eer.r_control},
        {"replan_period", c.eer.replan_period},
        {"likelihood_floor", c.eer.likelihood_floor}}},
  };
}

double coverage_fraction(const Trajectory& traj, const std::vector<int>& search_indices,
                         const SearchDomain& domain, int cells_per_axis) {
  if (cells_per_axis < 1) throw ConfigError("coverage needs at least one cell per axis");
  std::set<std::vector<int>> visited;
  for (const auto& s : traj.search_positions(search_indices)) {
    std::vector<int> cell(static_cast<std::size_t>(domain.dims));
    for (int i = 0; i < domain.dims; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double u = (s[i] - domain.lower[ui]) / domain.lengths[ui];
      cell[ui] = std::clamp(static_cast<int>(std::floor(u * cells_per_axis)), 0, cells_per_axis - 1);
    }
    visited.insert(cell);
  }
  return static_cast<double>(visited.size()) / std::pow(static_cast<double>(cells_per_axis), domain.dims);
}

json error_record(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  return {{"status", "error"}, {"kind", err ? err->kind() : "internal"}, {"message", e.what()}};
}

namespace {

struct Snapshot {
  double t;
  json files;
};

class Session {
 public:
  explicit Session(const RunConfig& config)
      : c_(config),
        out_(config.out_dir),
        localization_(is_localization(config.stage)),
        eer_(is_eer(config.stage)),
        domain_(localization_ ? config.scene.world_domain : config.scene.model_domain),
        theta_scene_(localization_ ? config.scene.transform : SE2{}),
        model_(std::make_shared<DoubleIntegrator>(2, config.u_limit)),
        sensor_rng_(derive_seed(config.seed, kSensor)),
        candidate_rng_(derive_seed(config.seed, kCandidates)) {
    if (c_.k_max > 0) domain_.k_max = c_.k_max;
    basis_ = make_basis(domain_);
    field_res_ = c_.likelihood.resolution_for(2);
  }

  RunResult execute() {
    fs::create_directories(out_);
    if (c_.write_artifacts) fs::create_directories(out_ / "snapshots");
    write_json(out_ / "manifest.json", manifest());
    try {
      setup();
      loop();
      finish();
    } catch (const std::exception& e) {
      json rec = error_record(e);
      rec["stage"] = to_string(c_.stage);
      rec["t"] = t_;
      write_json(out_ / "error.json", rec);
      try {
        write_logs();
      } catch (const std::exception& inner) {
        spdlog::warn("could not write partial logs: {}", inner.what());
      }
      throw;
    }
    return std::move(result_);
  }

 private:
  json manifest() const {
    return {{"program", "ergsense"},
            {"version", ERGSENSE_VERSION},
            {"stage", to_string(c_.stage)},
            {"seed", c_.seed},
            {"config", to_json(c_)}};
  }

  void setup() {
    x_ = c_.initial_state.size() ? c_.initial_state : Vec(Vec::Zero(4));
    if (!c_.initial_state.size()) {
      Rng rng(derive_seed(c_.seed, kStart));
      x_.head(2) = domain_.center();
      for (int i = 0; i < 2; ++i)
        x_[i] += kStartOffset * domain_.lengths[static_cast<std::size_t>(i)] * (2.0 * uniform01(rng) - 1.0);
    }
    if (!domain_.contains(x_.head(2))) throw DomainError("initial state lies outside the search domain");

    if (localization_) {
      if (c_.field == "ground_truth") {
        field_ = ground_truth_field(c_.scene, c_.ground_truth_resolution, c_.likelihood.prob_floor);
      } else {
        field_ = LikelihoodField(read_grid_csv(c_.field), c_.likelihood.prob_floor);
      }
      particles_ = init_uniform(c_.prior, c_.filter.num_particles, derive_seed(c_.seed, kParticles));
      if (!eer_) refresh_eid();
    } else {
      field_ = LikelihoodField::constant(c_.scene.model_domain, field_res_, 0.5, c_.likelihood.prob_floor);
      target_ = uniform_target(basis_, field_res_);
    }
    if (eer_) {
      lqr_.emplace(*model_, c_.eer);
    } else {
      controller_.emplace(model_, basis_, c_.controller);
    }
    if (c_.write_artifacts) {
      if (eer_) {
        control_log_.emplace(out_ / "controller.csv", std::vector<std::string>{"t", "target_x", "target_y"});
      } else {
        control_log_.emplace(out_ / "controller.csv",
                             std::vector<std::string>{"t", "tau", "lambda", "u0", "u1", "metric_default",
                                                      "metric_applied", "mode_insertion_gradient", "descent"});
      }
      if (localization_) {
        std::vector<std::string> cols{"t", "tx", "ty", "alpha", "ess"};
        for (int r = 0; r < 3; ++r)
          for (int q = 0; q < 3; ++q) cols.push_back("cov" + std::to_string(r) + std::to_string(q));
        estimate_log_.emplace(out_ / "estimates.csv", cols);
      }
    }
  }

  void refresh_eid() {
    auto res = expected_information(basis_, field_, particles_, c_.eid);
    eid_ = std::move(res.determinant);
    target_ = std::move(res.target);
    if (res.degenerate) ++degenerate_eids_;
  }

  void measure() {
    const Point2 p = x_.head<2>();
    const int y = sense(c_.scene, theta_scene_, c_.scene.sensor, p, sensor_rng_);
    log_.append(t_, Vec(p), y);
    const int shape = contact_shape(c_.scene, theta_scene_, p);
    if (shape >= 0) contacted_.insert(shape);

    if (localization_) {
      update(particles_, field_, p, y, c_.filter);
      if (!eer_ && log_.size() % c_.eid_every == 0) refresh_eid();
      if (estimate_log_) {
        const auto est = estimate(particles_);
        std::vector<double> row{t_, est.mean[0], est.mean[1], est.mean[2], effective_sample_size(particles_)};
        for (int r = 0; r < 3; ++r)
          for (int q = 0; q < 3; ++q) row.push_back(est.covariance(r, q));
        estimate_log_->row(row);
      }
    } else if (log_.size() % c_.likelihood.refit_every == 0) {
      refit();
    }
  }

  void refit() {
    field_ = fit(log_, c_.scene.model_domain, c_.likelihood);
    ++refits_;
    fitted_on_ = log_.size();
    if (!eer_) target_ = stage1_target(basis_, field_);
  }

  void replan() {
    if (eer_) {
      if (localization_)
        eer_target_ = select_target(particles_, field_, domain_, c_.eer, candidate_rng_);
      else
        eer_target_ = select_target(field_, domain_, c_.eer, candidate_rng_);
      ++replans_;
      if (control_log_) control_log_->row({t_, eer_target_[0], eer_target_[1]});
      return;
    }
    // An action is kept until its window has passed, including one whose
    // insertion time is still ahead.
    if (action_ && t_ < action_->tau + action_->lambda) return;
    action_ = controller_->plan(x_, t_, target_);
    ++replans_;
    if (action_->descent) ++descents_;
    if (control_log_) {
      const auto& a = *action_;
      control_log_->row({t_, a.tau, a.lambda, a.u_star[0], a.u_star[1], a.metric_default, a.metric_applied,
                         a.mode_insertion_gradient, a.descent ? 1.0 : 0.0});
    }
  }

  Vec control() const {
    if (eer_) return lqr_->control(x_, eer_target_);
    if (action_ && action_->active_at(t_)) return action_->u_star;
    return c_.controller.default_control(2);
  }

  void snapshot(std::size_t index) {
    if (!c_.write_artifacts) return;
    Snapshot s{t_, json::object()};
    if (localization_) {
      if (!eer_) {
        const auto name = snapshot_name("eid", index);
        write_grid_csv(out_ / name, eid_);
        s.files["eid"] = name;
      }
      const auto name = snapshot_name("particles", index);
      write_particles_csv(out_ / name, particles_);
      s.files["particles"] = name;
    } else {
      const auto name = snapshot_name("field", index);
      write_grid_csv(out_ / name, field_.grid());
      s.files["field"] = name;
    }
    snapshots_.push_back(std::move(s));
  }

  void loop() {
    const long steps = std::lround(c_.t_f / c_.dt);
    const long meas_every = ticks(c_.t_s, c_.dt, "t_s");
    const long replan_every = eer_ ? ticks(c_.eer.replan_period, c_.dt, "eer.replan_period")
                                   : ticks(c_.replan_period, c_.dt, "replan_period");
    const long snap_every = c_.snapshot_interval > 0.0 ? ticks(c_.snapshot_interval, c_.dt, "snapshot_interval") : 0;
    traj_.step = c_.dt;
    for (long i = 0; i < steps; ++i) {
      t_ = static_cast<double>(i) * c_.dt;
      if (i % meas_every == 0) measure();
      if (i % replan_every == 0) replan();
      if (controller_) controller_->record(t_, x_);
      if (snap_every > 0 && i % snap_every == 0) snapshot(snapshots_.size());

      const Vec u = control();
      traj_.push_back(t_, x_, u);
      Vec next = rk4_step(*model_, x_, [&](double) { return u; }, t_, c_.dt);
      if (c_.scene.sensor.mode == SensorMode::solid) next = solid_step(c_.scene, theta_scene_, x_, next).state;
      x_ = confine_to_domain(domain_, next);
      if (!x_.allFinite()) throw NumericError("robot state became non-finite");
    }
    t_ = static_cast<double>(steps) * c_.dt;
    traj_.push_back(t_, x_, Vec::Zero(2));
  }

  void write_logs() {
    if (!c_.write_artifacts) return;
    write_trajectory_csv(out_ / "trajectory.csv", traj_);
    write_measurements_csv(out_ / "measurements.csv", log_);
    if (control_log_) control_log_->flush();
    if (estimate_log_) estimate_log_->flush();
    json index = json::array();
    for (const auto& s : snapshots_) index.push_back({{"t", s.t}, {"files", s.files}});
    write_json(out_ / "snapshots" / "index.json", index);
  }

  void finish() {
    if (!localization_ && fitted_on_ != log_.size() && !log_.empty()) refit();
    if (localization_ && eer_) refresh_eid();

    json m;
    m["schema"] = "ergsense.metrics/1";
    m["stage"] = to_string(c_.stage);
    m["policy"] = eer_ ? "eer" : "ergodic";
    m["seed"] = c_.seed;
    m["t_f"] = c_.t_f;
    m["steps"] = traj_.size() - 1;
    m["n_measurements"] = log_.size();
    m["n_positive"] = log_.positives();
    m["objects_contacted"] = contacted_.size();
    m["contacted_shapes"] = std::vector<int>(contacted_.begin(), contacted_.end());
    m["coverage_fraction"] = coverage_fraction(traj_, model_->search_indices(), domain_);
    m["replans"] = replans_;
    if (!eer_) m["descent_actions"] = descents_;
    const auto ck = trajectory_coefficients(basis_, traj_, model_->search_indices());
    m["ergodic_metric_uniform"] = ergodic_metric(ck, uniform_target(basis_, field_res_), 1.0);
    m["ergodic_metric_target"] = ergodic_metric(ck, target_, 1.0);

    if (localization_) {
      const auto est = estimate(particles_);
      const auto err = theta_error(est.as_se2(), c_.scene.transform);
      m["theta_true"] = to_json(c_.scene.transform);
      m["theta_estimate"] = vec_json(est.mean);
      m["theta_error"] = vec_json(err);
      m["theta_abs_error"] = vec_json(err.cwiseAbs());
      m["covariance"] = vec_json(Eigen::Map<const Vec>(est.covariance.data(), 9));
      m["posterior_logdet"] = std::log(std::max(est.covariance.determinant(), 1e-300));
      m["weight_entropy"] = entropy(particles_.weights);
      m["ess"] = effective_sample_size(particles_);
      m["resamples"] = particles_.resample_count;
      m["move_acceptance"] = particles_.moves_proposed
                                 ? static_cast<double>(particles_.moves_accepted) / particles_.moves_proposed
                                 : 0.0;
      m["degenerate_eids"] = degenerate_eids_;
      result_.particles = particles_;
      result_.estimate = est;
    } else {
      m["refits"] = refits_;
      m["auc"] = field_auc(field_, c_.scene, SE2{});
      double h = 0.0;
      const auto& g = field_.grid();
      for (std::size_t i = 0; i < g.num_nodes(); ++i) h += g.quadrature_weight(i) * bernoulli_entropy(g.values[i]);
      m["field_mean_entropy"] = h / g.domain.volume();
    }

    write_logs();
    if (c_.write_artifacts) {
      write_json(out_ / "scene.json", to_json(c_.scene));
      if (localization_) {
        write_particles_csv(out_ / "particles_final.csv", particles_);
        if (!eer_ || eid_.num_nodes()) write_grid_csv(out_ / "eid_final.csv", eid_);
        write_grid_csv(out_ / "field.csv", field_.grid());
      } else {
        write_grid_csv(out_ / "field_final.csv", field_.grid());
      }
    }
    write_json(out_ / "metrics.json", m);
    result_.metrics_sha256 = sha256_file(out_ / "metrics.json");
    {
      std::ofstream sum(out_ / "metrics.sha256");
      sum << result_.metrics_sha256 << "  metrics.json\n";
    }
    result_.metrics = std::move(m);
    result_.out_dir = out_;
    result_.trajectory = std::move(traj_);
    result_.measurements = std::move(log_);
    result_.field = field_;
    result_.snapshots = snapshots_.size();
  }

  const RunConfig& c_;
  fs::path out_;
  bool localization_;
  bool eer_;
  SearchDomain domain_;
  SE2 theta_scene_;
  std::shared_ptr<DoubleIntegrator> model_;
  BasisPtr basis_;
  int field_res_ = 64;
  Rng sensor_rng_;
  Rng candidate_rng_;

  double t_ = 0.0;
  Vec x_;
  Trajectory traj_;
  MeasurementLog log_;
  LikelihoodField field_;
  TargetDistribution target_;
  GridField eid_;
  ParticleSet particles_;
  std::set<int> contacted_;
  std::size_t refits_ = 0;
  std::size_t fitted_on_ = 0;
  std::size_t replans_ = 0;
  std::size_t descents_ = 0;
  std::size_t degenerate_eids_ = 0;

  std::optional<ErgodicController> controller_;
  std::optional<ControlAction> action_;
  std::optional<LqrTracker> lqr_;
  Vec eer_target_;

  std::optional<CsvWriter> control_log_;
  std::optional<CsvWriter> estimate_log_;
  std::vector<Snapshot> snapshots_;
  RunResult result_;
};

}  // namespace

RunResult run(const RunConfig& config) {
  config.validate();
  Session session(config);
  return session.execute();
}

RunResult run_explore(RunConfig config) {
  if (config.stage != Stage::explore && config.stage != Stage::eer_explore) config.stage = Stage::explore;
  return run(config);
}

RunResult run_localize(RunConfig config) {
  if (config.stage != Stage::localize && config.stage != Stage::eer_localize) config.stage = Stage::localize;
  return run(config);
}

json run_comparison(const RunConfig& config) {
  const fs::path root(config.out_dir);
  json summary;
  summary["seed"] = config.seed;
  summary["t_f"] = config.t_f;
  auto run_one = [&](Stage stage, const char* dir) {
    RunConfig c = config;
    c.stage = stage;
    c.out_dir = (root / dir).string();
    auto res = run(c);
    json m = res.metrics;
    m["metrics_sha256"] = res.metrics_sha256;
    return m;
  };
  summary["explore"]["ergodic"] = run_one(Stage::explore, "ergodic_explore");
  summary["explore"]["eer"] = run_one(Stage::eer_explore, "eer_explore");
  if (config.compare_localize) {
    summary["localize"]["ergodic"] = run_one(Stage::localize, "ergodic_localize");
    summary["localize"]["eer"] = run_one(Stage::eer_localize, "eer_localize");
  }
  write_json(root / "comparison.json", summary);
  return summary;
}

json evaluate_run(const fs::path& dir) {
  json out;
  const json manifest = read_json(dir / "manifest.json");
  if (fs::exists(dir / "error.json")) throw DegenerateError("run in " + dir.string() + " ended with an error");
  const json metrics = read_json(dir / "metrics.json");
  const RunConfig c = config_from_json(manifest.at("config"));

  std::string recorded;
  {
    std::ifstream in(dir / "metrics.sha256");
    in >> recorded;
  }
  out["checksum_ok"] = !recorded.empty() && recorded == sha256_file(dir / "metrics.json");

  const auto traj = read_trajectory_csv(dir / "trajectory.csv");
  const auto log = read_measurements_csv(dir / "measurements.csv");
  const bool loc = is_localization(c.stage);
  const SearchDomain domain = loc ? c.scene.world_domain : c.scene.model_domain;
  const SE2 theta = loc ? c.scene.transform : SE2{};
  const std::vector<int> search{0, 1};

  std::size_t parsed = 0;
  for (const auto& s : read_json(dir / "snapshots" / "index.json")) {
    for (const auto& [kind, file] : s.at("files").items()) {
      const auto path = dir / file.get<std::string>();
      if (kind == "particles")
        read_particles_csv(path);
      else
        read_grid_csv(path);
      ++parsed;
    }
  }
  out["snapshots_parsed"] = parsed;

  std::set<int> contacted;
  for (const auto& m : log.samples()) {
    const int k = contact_shape(c.scene, theta, Point2(m.x[0], m.x[1]));
    if (k >= 0) contacted.insert(k);
  }
  out["n_measurements"] = log.size();
  out["objects_contacted"] = contacted.size();
  out["coverage_fraction"] = coverage_fraction(traj, search, domain);

  bool consistent = out["n_measurements"] == metrics.at("n_measurements") &&
                    out["objects_contacted"] == metrics.at("objects_contacted") &&
                    std::abs(out["coverage_fraction"].get<double>() - metrics.at("coverage_fraction").get<double>()) < 1e-12;
  if (loc) {
    const auto particles = read_particles_csv(dir / "particles_final.csv");
    const auto est = estimate(particles);
    const auto err = theta_error(est.as_se2(), c.scene.transform);
    out["theta_estimate"] = vec_json(est.mean);
    out["theta_abs_error"] = vec_json(err.cwiseAbs());
    const auto recorded_est = vec_from_json(metrics.at("theta_estimate"));
    consistent = consistent && (recorded_est - est.mean).cwiseAbs().maxCoeff() < 1e-9;
  } else {
    const LikelihoodField field(read_grid_csv(dir / "field_final.csv"), c.likelihood.prob_floor);
    const double a = field_auc(field, c.scene, SE2{});
    out["auc"] = a;
    consistent = consistent && std::abs(a - metrics.at("auc").get<double>()) < 1e-9;
  }
  out["consistent"] = consistent;
  out["stage"] = to_string(c.stage);
  write_json(dir / "eval.json", out);
  return out;
}

}  // namespace ergsense
