#pragma once

#include "ergsense/domain.hpp"
#include "ergsense/environment.hpp"
#include "ergsense/filter.hpp"
#include "ergsense/likelihood.hpp"
#include "ergsense/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace ergsense {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Grid CSV: one header line
//   # grid dims=2 sizes=64,64 lengths=1,1 lower=0,0
// followed by one row of sizes[0] values per combination of the remaining
// axes (axis 0 varies along a row, axis 1 next, and so on).
void write_grid_csv(const fs::path& path, const GridField& grid);
GridField read_grid_csv(const fs::path& path);

// Coefficient CSV: columns k0,...,k{v-1},value.
void write_coefficients_csv(const fs::path& path, const SpectralCoefficients& coeffs);
/// (multi-index, value) rows.
std::vector<std::pair<BasisIndex, double>> read_coefficients_csv(const fs::path& path);

// Trajectory CSV: t,x0..x{n-1},u0..u{m-1}.
void write_trajectory_csv(const fs::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const fs::path& path);

// Measurement CSV: t,x0,..,y.
void write_measurements_csv(const fs::path& path, const MeasurementLog& log);
MeasurementLog read_measurements_csv(const fs::path& path);

// Particle CSV: tx,ty,alpha,w.
void write_particles_csv(const fs::path& path, const ParticleSet& particles);
ParticleSet read_particles_csv(const fs::path& path);

/// Rows of numbers under a single header line; the header is returned in
/// `columns` when non-null.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path,
                                                  std::vector<std::string>* columns = nullptr);

/// Minimal CSV writer: a header line, then rows of doubles at full precision.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void flush();

 private:
  std::unique_ptr<std::ofstream> stream_;
  std::size_t width_;
};

json to_json(const SearchDomain& domain);
SearchDomain domain_from_json(const json& j);
json to_json(const Shape& shape);
Shape shape_from_json(const json& j);
json to_json(const Scene& scene);
Scene scene_from_json(const json& j);
json to_json(const SE2& theta);
SE2 se2_from_json(const json& j);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);

/// Lowercase hex SHA-256 of a byte string / file contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

}  // namespace ergsense
