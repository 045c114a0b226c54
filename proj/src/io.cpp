#include "ergsense/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace ergsense {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const fs::path& path) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("malformed number '" + std::string(s) + "' in " + path.string());
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<double> parse_list(const std::string& s, const fs::path& path) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) out.push_back(parse_double(tok, path));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt(v[i]);
  }
  return s;
}

}  // namespace

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& columns)
    : stream_(std::make_unique<std::ofstream>(open_out(path))), width_(columns.size()) {
  for (std::size_t i = 0; i < columns.size(); ++i) *stream_ << (i ? "," : "") << columns[i];
  *stream_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) throw ConfigError("CSV row width does not match header");
  *stream_ << join(values) << '\n';
}

void CsvWriter::flush() { stream_->flush(); }

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::vector<std::string>* columns) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  if (columns) *columns = header;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto toks = split(line, ',');
    if (toks.size() != header.size()) throw ConfigError("ragged row in " + path.string());
    std::vector<double> r;
    r.reserve(toks.size());
    for (const auto& t : toks) r.push_back(parse_double(t, path));
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_grid_csv(const fs::path& path, const GridField& grid) {
  auto out = open_out(path);
  std::vector<double> sizes(grid.sizes.begin(), grid.sizes.end());
  std::string sz;
  for (std::size_t i = 0; i < grid.sizes.size(); ++i) sz += (i ? "," : "") + std::to_string(grid.sizes[i]);
  out << "# grid dims=" << grid.domain.dims << " sizes=" << sz << " lengths=" << join(grid.domain.lengths)
      << " lower=" << join(grid.domain.lower) << '\n';
  const auto n0 = static_cast<std::size_t>(grid.sizes[0]);
  for (std::size_t i = 0; i < grid.values.size(); i += n0) {
    for (std::size_t j = 0; j < n0; ++j) out << (j ? "," : "") << fmt(grid.values[i + j]);
    out << '\n';
  }
  if (!out) throw ConfigError("failed writing " + path.string());
}

GridField read_grid_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# grid", 0) != 0)
    throw ConfigError("missing grid header in " + path.string());
  int dims = 0;
  std::vector<int> sizes;
  std::vector<double> lengths;
  std::vector<double> lower;
  std::istringstream hs(line.substr(6));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("bad grid header field in " + path.string());
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    if (key == "dims") {
      dims = static_cast<int>(parse_double(val, path));
    } else if (key == "sizes") {
      for (double v : parse_list(val, path)) sizes.push_back(static_cast<int>(v));
    } else if (key == "lengths") {
      lengths = parse_list(val, path);
    } else if (key == "lower") {
      lower = parse_list(val, path);
    }
  }
  if (dims < 1 || static_cast<int>(sizes.size()) != dims || static_cast<int>(lengths.size()) != dims)
    throw ConfigError("inconsistent grid header in " + path.string());
  GridField grid(SearchDomain(lengths, -1, lower), sizes, 0.0);
  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto toks = split(line, ',');
    if (toks.size() != static_cast<std::size_t>(sizes[0])) throw ConfigError("ragged grid row in " + path.string());
    for (const auto& t : toks) {
      if (k >= grid.values.size()) throw ConfigError("too many grid values in " + path.string());
      grid.values[k++] = parse_double(t, path);
    }
  }
  if (k != grid.values.size()) throw ConfigError("too few grid values in " + path.string());
  return grid;
}

void write_coefficients_csv(const fs::path& path, const SpectralCoefficients& coeffs) {
  const int v = coeffs.basis->domain().dims;
  std::vector<std::string> cols;
  for (int i = 0; i < v; ++i) cols.push_back("k" + std::to_string(i));
  cols.push_back("value");
  CsvWriter w(path, cols);
  const auto& idx = coeffs.basis->indices();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::vector<double> row(idx[r].begin(), idx[r].end());
    row.push_back(coeffs.values[static_cast<Eigen::Index>(r)]);
    w.row(row);
  }
}

std::vector<std::pair<BasisIndex, double>> read_coefficients_csv(const fs::path& path) {
  std::vector<std::pair<BasisIndex, double>> out;
  for (const auto& r : read_numeric_csv(path)) {
    if (r.size() < 2) throw ConfigError("coefficient rows need an index and a value");
    BasisIndex k;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) k.push_back(static_cast<int>(r[i]));
    out.emplace_back(std::move(k), r.back());
  }
  return out;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  const auto n = traj.empty() ? 0 : traj.states[0].size();
  const auto m = traj.empty() || traj.controls.empty() ? 0 : traj.controls[0].size();
  std::vector<std::string> cols{"t"};
  for (Eigen::Index i = 0; i < n; ++i) cols.push_back("x" + std::to_string(i));
  for (Eigen::Index i = 0; i < m; ++i) cols.push_back("u" + std::to_string(i));
  CsvWriter w(path, cols);
  for (std::size_t j = 0; j < traj.size(); ++j) {
    std::vector<double> row{traj.times[j]};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(traj.states[j][i]);
    for (Eigen::Index i = 0; i < m; ++i) row.push_back(traj.controls[j][i]);
    w.row(row);
  }
}

Trajectory read_trajectory_csv(const fs::path& path) {
  std::vector<std::string> cols;
  const auto rows = read_numeric_csv(path, &cols);
  std::size_t n = 0;
  std::size_t m = 0;
  for (const auto& c : cols) {
    if (!c.empty() && c[0] == 'x') ++n;
    if (!c.empty() && c[0] == 'u') ++m;
  }
  Trajectory traj;
  for (const auto& r : rows) {
    Vec x(static_cast<Eigen::Index>(n));
    Vec u(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = r[1 + i];
    for (std::size_t i = 0; i < m; ++i) u[static_cast<Eigen::Index>(i)] = r[1 + n + i];
    traj.push_back(r[0], std::move(x), std::move(u));
  }
  return traj;
}

void write_measurements_csv(const fs::path& path, const MeasurementLog& log) {
  const auto v = log.empty() ? 2 : log.samples()[0].x.size();
  std::vector<std::string> cols{"t"};
  for (Eigen::Index i = 0; i < v; ++i) cols.push_back("x" + std::to_string(i));
  cols.push_back("y");
  CsvWriter w(path, cols);
  for (const auto& s : log.samples()) {
    std::vector<double> row{s.t};
    for (Eigen::Index i = 0; i < v; ++i) row.push_back(s.x[i]);
    row.push_back(s.y);
    w.row(row);
  }
}

MeasurementLog read_measurements_csv(const fs::path& path) {
  MeasurementLog log;
  for (const auto& r : read_numeric_csv(path)) {
    if (r.size() < 3) throw ConfigError("measurement rows need t, position and y");
    Vec x(static_cast<Eigen::Index>(r.size() - 2));
    for (std::size_t i = 1; i + 1 < r.size(); ++i) x[static_cast<Eigen::Index>(i - 1)] = r[i];
    log.append(r[0], x, static_cast<int>(r.back()));
  }
  return log;
}

void write_particles_csv(const fs::path& path, const ParticleSet& particles) {
  CsvWriter w(path, {"tx", "ty", "alpha", "w"});
  for (std::size_t j = 0; j < particles.size(); ++j) {
    const auto& th = particles.thetas[j];
    w.row({th.tx, th.ty, th.alpha, particles.weights[j]});
  }
}

ParticleSet read_particles_csv(const fs::path& path) {
  ParticleSet ps;
  for (const auto& r : read_numeric_csv(path)) {
    if (r.size() != 4) throw ConfigError("particle rows need tx, ty, alpha, w");
    ps.thetas.push_back({r[0], r[1], r[2]});
    ps.weights.push_back(r[3]);
  }
  return ps;
}

json to_json(const SearchDomain& domain) {
  return {{"lengths", domain.lengths}, {"lower", domain.lower}, {"k_max", domain.k_max}};
}

SearchDomain domain_from_json(const json& j) {
  return SearchDomain(j.at("lengths").get<std::vector<double>>(), j.value("k_max", -1),
                      j.value("lower", std::vector<double>{}));
}

json to_json(const Shape& shape) {
  json j{{"kind", to_string(shape.kind)}, {"center", {shape.center.x(), shape.center.y()}}};
  if (shape.kind == ShapeKind::circle) {
    j["radius"] = shape.size.x();
  } else {
    j["size"] = {shape.size.x(), shape.size.y()};
    j["rotation"] = shape.rotation;
  }
  return j;
}

Shape shape_from_json(const json& j) {
  const auto kind = shape_kind_from_string(j.at("kind").get<std::string>());
  const auto c = j.at("center").get<std::vector<double>>();
  if (c.size() != 2) throw ConfigError("shape center must have two components");
  const Point2 center(c[0], c[1]);
  if (kind == ShapeKind::circle) return Shape::circle(center, j.at("radius").get<double>());
  const auto s = j.at("size").get<std::vector<double>>();
  if (s.size() != 2) throw ConfigError("shape size must have two components");
  const double rot = j.value("rotation", 0.0);
  return kind == ShapeKind::rectangle ? Shape::rectangle(center, {s[0], s[1]}, rot)
                                      : Shape::ellipse(center, {s[0], s[1]}, rot);
}

json to_json(const SE2& theta) { return json::array({theta.tx, theta.ty, theta.alpha}); }

SE2 se2_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ConfigError("transform must be [tx, ty, alpha]");
  return {v[0], v[1], v[2]};
}

json to_json(const Scene& scene) {
  json shapes = json::array();
  for (const auto& s : scene.shapes) shapes.push_back(to_json(s));
  return {{"shapes", shapes},
          {"model_domain", to_json(scene.model_domain)},
          {"world_domain", to_json(scene.world_domain)},
          {"transform", to_json(scene.transform)},
          {"sensor",
           {{"flip_noise", scene.sensor.flip_noise},
            {"mode", to_string(scene.sensor.mode)},
            {"sample_period", scene.sensor.sample_period}}}};
}

Scene scene_from_json(const json& j) {
  Scene scene = default_scene();
  try {
    if (j.contains("shapes")) {
      scene.shapes.clear();
      for (const auto& s : j.at("shapes")) scene.shapes.push_back(shape_from_json(s));
    }
    if (j.contains("model_domain")) scene.model_domain = domain_from_json(j.at("model_domain"));
    if (j.contains("world_domain")) scene.world_domain = domain_from_json(j.at("world_domain"));
    if (j.contains("transform")) scene.transform = se2_from_json(j.at("transform"));
    if (j.contains("sensor")) {
      const auto& s = j.at("sensor");
      scene.sensor.flip_noise = s.value("flip_noise", scene.sensor.flip_noise);
      if (s.contains("mode")) scene.sensor.mode = sensor_mode_from_string(s.at("mode").get<std::string>());
      scene.sensor.sample_period = s.value("sample_period", scene.sensor.sample_period);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scene: ") + e.what());
  }
  scene.validate();
  return scene;
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_file(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

}  // namespace ergsense
