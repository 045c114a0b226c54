#pragma once

#include "ergsense/baseline_eer.hpp"
#include "ergsense/ergodic_control.hpp"
#include "ergsense/filter.hpp"
#include "ergsense/information.hpp"
#include "ergsense/io.hpp"
#include "ergsense/likelihood.hpp"

#include <optional>
#include <string>

namespace ergsense {

enum class Stage { explore, localize, eer_explore, eer_localize };

const char* to_string(Stage stage);
Stage stage_from_string(const std::string& s);

struct RunConfig {
  Stage stage = Stage::explore;
  Scene scene = default_scene();
  /// Where the scene came from ("default" or a file path), echoed in the manifest.
  std::string scene_source = "default";

  double t_f = 120.0;
  /// Measurement period; defaults to the sensor's sample period.
  double t_s = 0.1;
  double dt = 0.01;
  /// Ergodic replan period. The EER baseline uses eer.replan_period.
  double replan_period = 0.1;
  double snapshot_interval = 1.25;
  std::uint64_t seed = 0;
  double u_limit = kDefaultControlLimit;
  /// Start state; empty means at rest near the domain centre, offset by up
  /// to 5% of each side length (seed dependent).
  Vec initial_state;
  /// Basis order; non-positive picks the default for the dimension.
  int k_max = -1;

  /// Localization: "ground_truth" or a grid CSV written by an exploration run.
  std::string field = "ground_truth";
  int ground_truth_resolution = 64;
  /// Recompute the EID after every this many measurements.
  std::size_t eid_every = 1;

  ErgodicControllerConfig controller;
  LikelihoodConfig likelihood;
  FilterConfig filter;
  ThetaBounds prior;
  EIDConfig eid;
  EERConfig eer;

  /// Comparison runs also pit the two policies against each other on localization.
  bool compare_localize = true;

  /// Write snapshot and log files; metrics and the manifest are always written.
  bool write_artifacts = true;
  std::string out_dir = "run";

  void validate() const;
};

/// Fills a config from JSON; absent keys keep their defaults. `base_dir`
/// resolves relative scene and field paths.
RunConfig config_from_json(const json& j, const fs::path& base_dir = {});
RunConfig load_config(const fs::path& path);
json to_json(const RunConfig& config);

/// The cell-visit fraction over an n x n partition of the domain.
double coverage_fraction(const Trajectory& traj, const std::vector<int>& search_indices,
                         const SearchDomain& domain, int cells_per_axis = 10);

struct RunResult {
  json metrics;
  /// SHA-256 of the metrics file bytes.
  std::string metrics_sha256;
  fs::path out_dir;

  Trajectory trajectory;
  MeasurementLog measurements;
  /// Final learned field (exploration) or the field used (localization).
  std::optional<LikelihoodField> field;
  std::optional<ParticleSet> particles;
  std::optional<ThetaEstimate> estimate;
  std::size_t snapshots = 0;
};

/// Runs one stage end to end and writes its artifacts. On failure an
/// error.json record and the partial logs are written before rethrowing.
RunResult run(const RunConfig& config);
RunResult run_explore(RunConfig config);
RunResult run_localize(RunConfig config);

/// Ergodic and EER policies from the same seed and scene. Results land in
/// subdirectories of out_dir with a comparison.json summary.
json run_comparison(const RunConfig& config);

/// Re-reads a run directory through the artifact readers, recomputes the
/// headline metrics and checks the metrics checksum.
json evaluate_run(const fs::path& run_dir);

/// Machine-readable record of an exception.
json error_record(const std::exception& e);

}  // namespace ergsense
