#include "ergsense/io.hpp"
#include "ergsense/runner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace ergsense;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

SearchDomain domain_of(std::vector<double> lengths, std::vector<double> lower, int k_max) {
  const int dims = static_cast<int>(lengths.size());
  return SearchDomain(std::move(lengths), k_max > 0 ? k_max : default_k_max(dims), std::move(lower));
}

RunConfig prepare(const std::string& config_json, const std::string& base_dir, const std::string& stage,
                  std::optional<std::uint64_t> seed, std::optional<std::string> out,
                  std::optional<double> snapshot_interval) {
  RunConfig c = config_from_json(json::parse(config_json), base_dir);
  if (!stage.empty()) c.stage = stage_from_string(stage);
  if (seed) c.seed = *seed;
  if (out) c.out_dir = *out;
  if (snapshot_interval) c.snapshot_interval = *snapshot_interval;
  return c;
}

// Grid values are stored with axis 0 fastest, so a C-ordered array has the
// axes reversed: density[y, x] in 2-D.
py::array_t<double> grid_to_array(const GridField& g) {
  std::vector<py::ssize_t> shape(g.sizes.rbegin(), g.sizes.rend());
  py::array_t<double> out(shape);
  std::copy(g.values.begin(), g.values.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_ergsense, m) {
  m.doc() = "Ergodic active sensing core";
  m.attr("__version__") = ERGSENSE_VERSION;

  static py::exception<Error> error(m, "ErgsenseError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object cls = py::module_::import("ergsense._ergsense").attr("ErgsenseError");
      py::object inst = cls(e.what());
      inst.attr("kind") = e.kind();
      PyErr_SetObject(cls.ptr(), inst.ptr());
    }
  });

  m.def(
      "run_json",
      [](const std::string& config_json, const std::string& base_dir, const std::string& stage,
         std::optional<std::uint64_t> seed, std::optional<std::string> out, std::optional<double> snap) {
        const RunConfig c = prepare(config_json, base_dir, stage, seed, out, snap);
        RunResult res;
        {
          py::gil_scoped_release release;
          res = run(c);
        }
        return json{{"metrics", res.metrics},
                    {"metrics_sha256", res.metrics_sha256},
                    {"out_dir", res.out_dir.string()},
                    {"snapshots", res.snapshots}}
            .dump();
      },
      py::arg("config_json"), py::arg("base_dir") = "", py::arg("stage") = "", py::arg("seed") = py::none(),
      py::arg("out") = py::none(), py::arg("snapshot_interval") = py::none());

  m.def(
      "compare_json",
      [](const std::string& config_json, const std::string& base_dir, std::optional<std::uint64_t> seed,
         std::optional<std::string> out, std::optional<double> snap) {
        const RunConfig c = prepare(config_json, base_dir, "", seed, out, snap);
        py::gil_scoped_release release;
        return run_comparison(c).dump();
      },
      py::arg("config_json"), py::arg("base_dir") = "", py::arg("seed") = py::none(), py::arg("out") = py::none(),
      py::arg("snapshot_interval") = py::none());

  m.def("evaluate_json", [](const std::string& run_dir) { return evaluate_run(run_dir).dump(); },
        py::arg("run_dir"));

  m.def("default_config_json", [] { return to_json(RunConfig{}).dump(); });

  m.def(
      "basis_indices",
      [](std::vector<double> lengths, std::vector<double> lower, int k_max) {
        return make_basis(domain_of(std::move(lengths), std::move(lower), k_max))->indices();
      },
      py::arg("lengths"), py::arg("lower") = std::vector<double>{}, py::arg("k_max") = 0);

  m.def(
      "trajectory_coefficients",
      [](Array positions, double dt, std::vector<double> lengths, std::vector<double> lower, int k_max) {
        const auto basis = make_basis(domain_of(std::move(lengths), std::move(lower), k_max));
        const auto dims = static_cast<py::ssize_t>(basis->domain().dims);
        if (positions.ndim() != 2 || positions.shape(1) != dims)
          throw ConfigError("positions must have shape (n, dims)");
        std::vector<Vec> pts;
        auto r = positions.unchecked<2>();
        for (py::ssize_t i = 0; i < r.shape(0); ++i) {
          Vec s(dims);
          for (py::ssize_t d = 0; d < dims; ++d) s[d] = r(i, d);
          pts.push_back(std::move(s));
        }
        const std::vector<double> w(pts.size(), dt);
        return time_average_coefficients(basis, pts, w).values;
      },
      py::arg("positions"), py::arg("dt"), py::arg("lengths"), py::arg("lower") = std::vector<double>{},
      py::arg("k_max") = 0);

  m.def(
      "target_coefficients",
      [](Array density, std::vector<double> lengths, std::vector<double> lower, int k_max) {
        const SearchDomain d = domain_of(std::move(lengths), std::move(lower), k_max);
        if (density.ndim() != d.dims) throw ConfigError("density rank differs from the domain dimension");
        std::vector<int> sizes;
        for (py::ssize_t a = density.ndim() - 1; a >= 0; --a) sizes.push_back(static_cast<int>(density.shape(a)));
        GridField g(d, sizes, 0.0);
        std::copy(density.data(), density.data() + density.size(), g.values.begin());
        return distribution_coefficients(make_basis(d), std::move(g)).phi.values;
      },
      py::arg("density"), py::arg("lengths"), py::arg("lower") = std::vector<double>{}, py::arg("k_max") = 0);

  m.def(
      "ergodic_metric",
      [](const Vec& c, const Vec& phi, std::vector<double> lengths, std::vector<double> lower, int k_max,
         double q) {
        const auto basis = make_basis(domain_of(std::move(lengths), std::move(lower), k_max));
        if (c.size() != phi.size() || static_cast<std::size_t>(c.size()) != basis->size())
          throw ConfigError("coefficient vectors do not match the basis");
        return ergodic_metric(SpectralCoefficients{basis, c}, SpectralCoefficients{basis, phi}, q);
      },
      py::arg("c"), py::arg("phi"), py::arg("lengths"), py::arg("lower") = std::vector<double>{},
      py::arg("k_max") = 0, py::arg("q") = 1.0);

  m.def(
      "ground_truth_field",
      [](const std::string& scene_json, int per_axis, double eps) {
        const Scene scene = scene_json.empty() ? default_scene() : scene_from_json(json::parse(scene_json));
        return grid_to_array(ground_truth_field(scene, per_axis, eps).grid());
      },
      py::arg("scene_json") = "", py::arg("per_axis") = 64, py::arg("eps") = 1e-3);

  m.def(
      "read_grid_csv",
      [](const std::string& path) {
        const GridField g = read_grid_csv(path);
        return py::make_tuple(grid_to_array(g), g.domain.lengths, g.domain.lower);
      },
      py::arg("path"));

  m.def("sha256_file", [](const std::string& path) { return sha256_file(path); }, py::arg("path"));
}
