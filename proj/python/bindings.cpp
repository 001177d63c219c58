// Thin Python bindings: estimators and instance generators on NumPy arrays.
// Reports are returned as JSON strings decoded on the Python side.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "huberfilt/datagen.hpp"
#include "huberfilt/estimator.hpp"
#include "huberfilt/report.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace huberfilt;

namespace {

py::array_t<std::uint8_t> label_array(const std::vector<std::uint8_t>& labels) {
  py::array_t<std::uint8_t> out(static_cast<py::ssize_t>(labels.size()));
  std::copy(labels.begin(), labels.end(), out.mutable_data());
  return out;
}

AlgorithmParams make_params(std::uint64_t seed, const std::string& overrides) {
  AlgorithmParams p;
  p.seed = seed;
  p.apply_overrides(overrides);
  return p;
}

py::tuple robust_mean_py(const RowMatrix& points, double eps, double c, std::uint64_t seed,
                         const std::string& params) {
  const Dataset data(points);
  const AlgorithmParams p = make_params(seed, params);
  MeanReport rep;
  {
    py::gil_scoped_release release;
    Rng rng(seed);
    rep = robust_mean(data, eps, c, p, rng);
  }
  return py::make_tuple(Vector(rep.mu_hat), to_json(rep, {false, false}).dump());
}

py::tuple robust_regression_py(const RowMatrix& xs, const Vector& ys, double eps, double c, std::uint64_t seed,
                               const std::string& params) {
  if (xs.rows() != ys.size()) throw std::invalid_argument("xs and ys have different lengths");
  RegressionInstance inst;
  inst.xs = xs;
  inst.ys = ys;
  const AlgorithmParams p = make_params(seed, params);
  RegressionReport rep;
  {
    py::gil_scoped_release release;
    Rng rng(seed);
    rep = robust_regression(inst, eps, c, p, rng);
  }
  return py::make_tuple(Vector(rep.beta_hat), to_json(rep, {false, false}).dump());
}

py::tuple gen_mean_py(int d, long n, double eps, const std::string& adversary, std::uint64_t seed) {
  ContaminationSpec spec = ContaminationSpec::parse(adversary);
  spec.direction_seed = seed;
  Rng rng(seed);
  const Dataset data = gen_mean_instance(d, n, eps, Vector::Zero(d), spec, rng);
  return py::make_tuple(RowMatrix(data.points()), label_array(data.labels()));
}

py::tuple gen_regression_py(const Vector& beta, long n, double eps, double sigma, const std::string& adversary,
                            std::uint64_t seed) {
  ContaminationSpec spec = ContaminationSpec::parse(adversary);
  spec.direction_seed = seed;
  Rng rng(seed);
  RegressionInstance inst = gen_regression_instance(beta.size(), n, eps, beta, sigma, spec, rng);
  return py::make_tuple(std::move(inst.xs), Vector(inst.ys), label_array(inst.labels));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust mean and regression estimation under Huber contamination";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def("robust_mean", &robust_mean_py, "points"_a, "eps"_a, "c"_a = 0.5, "seed"_a = 0, "params"_a = "",
        "Robust mean of an (n, d) array. Returns (mu_hat, report_json).");
  m.def("robust_regression", &robust_regression_py, "xs"_a, "ys"_a, "eps"_a, "c"_a = 0.5, "seed"_a = 0,
        "params"_a = "", "Robust regression coefficients. Returns (beta_hat, report_json).");
  m.def("sample_mean", [](const RowMatrix& points) { return Vector(sample_mean(Dataset(points))); }, "points"_a);
  m.def("gen_mean_instance", &gen_mean_py, "d"_a, "n"_a, "eps"_a, "adversary"_a = "none", "seed"_a = 0,
        "Contaminated N(0, I) sample. Returns (points, inlier_labels).");
  m.def("gen_regression_instance", &gen_regression_py, "beta"_a, "n"_a, "eps"_a, "sigma"_a = 1.0,
        "adversary"_a = "none", "seed"_a = 0, "Contaminated regression sample. Returns (xs, ys, inlier_labels).");
}
