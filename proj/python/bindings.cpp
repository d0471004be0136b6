#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "sgl/entropy.hpp"
#include "sgl/errors.hpp"
#include "sgl/kernels.hpp"
#include "sgl/model.hpp"
#include "sgl/norms.hpp"
#include "sgl/orchestrator.hpp"
#include "sgl/solver.hpp"

namespace py = pybind11;
using namespace sgl;

namespace {

ModelParams make_params(double alpha, double beta, double q, int d) {
  ModelParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.q = q;
  p.d = d;
  return p;
}

Field to_field(py::array_t<cplx, py::array::c_style | py::array::forcecast> a, double box_length) {
  if (a.ndim() != 1) throw ValidationError("dimension_unsupported", "expected a one-dimensional array");
  Grid g{1, box_length, static_cast<int>(a.shape(0))};
  g.validate();
  Field f = Field::zeros(g);
  std::copy(a.data(), a.data() + a.shape(0), f.values.begin());
  return f;
}

py::array_t<cplx> to_array(const Field& f) {
  py::array_t<cplx> out(static_cast<py::ssize_t>(f.size()));
  std::copy(f.values.begin(), f.values.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic complex Ginzburg-Landau lab";
  m.attr("__version__") = SGL_VERSION;

  static py::exception<Error> base(m, "SglError");
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  static py::exception<BlowUpError> blow_up(m, "BlowUpError", base.ptr());
  static py::exception<IoError> io(m, "IoError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      validation((e.code() + ": " + e.what()).c_str());
    } catch (const BlowUpError& e) {
      blow_up((e.code() + ": " + e.what()).c_str());
    } catch (const IoError& e) {
      io((e.code() + ": " + e.what()).c_str());
    } catch (const Error& e) {
      base((e.code() + ": " + e.what()).c_str());
    }
  });

  m.def(
      "check_hypothesis",
      [](double alpha, double beta, double q, int d) {
        const HypothesisReport r = check_hypothesis(make_params(alpha, beta, q, d));
        py::dict out;
        out["condition1_lhs"] = r.condition1_lhs;
        out["condition1_rhs"] = r.condition1_rhs;
        out["condition1_ok"] = r.condition1_ok;
        out["beta_bound"] = r.beta_bound;
        out["condition2_ok"] = r.condition2_ok;
        out["theta"] = r.theta;
        out["satisfied"] = r.satisfied;
        out["boundary_warning"] = r.boundary_warning;
        return out;
      },
      py::arg("alpha"), py::arg("beta"), py::arg("q") = 1.0, py::arg("d") = 1);

  m.def(
      "margin",
      [](double alpha, double beta, double epsilon, double q, int d) {
        const DissipativityMargin r = margin(make_params(alpha, beta, q, d), epsilon);
        py::dict out;
        out["lambda"] = r.lambda;
        out["eta"] = r.eta;
        out["epsilon"] = r.epsilon;
        out["margin_value"] = r.margin_value;
        out["bracket_value"] = r.bracket_value;
        return out;
      },
      py::arg("alpha"), py::arg("beta"), py::arg("epsilon"), py::arg("q") = 1.0, py::arg("d") = 1);

  m.def(
      "feasible_epsilon_max",
      [](double alpha, double beta, double q, int d) { return feasible_epsilon_max(make_params(alpha, beta, q, d)); },
      py::arg("alpha"), py::arg("beta"), py::arg("q") = 1.0, py::arg("d") = 1);

  m.def("chi", &chi, py::arg("s"));
  m.def(
      "kernel_minus",
      [](double t, double x, double p_star, double alpha) {
        KernelConfig c;
        c.p_star = p_star;
        c.alpha = alpha;
        return kernel_minus(t, x, c);
      },
      py::arg("t"), py::arg("x"), py::arg("p_star") = 5.0, py::arg("alpha") = 0.0);
  m.def(
      "kernel_plus",
      [](double t, double x, double p_star, double alpha) {
        KernelConfig c;
        c.p_star = p_star;
        c.alpha = alpha;
        return kernel_plus(t, x, c);
      },
      py::arg("t"), py::arg("x"), py::arg("p_star") = 5.0, py::arg("alpha") = 0.0);
  m.def("kernel_full", &kernel_full, py::arg("t"), py::arg("x"), py::arg("alpha") = 0.0);

  m.def("partition_entropy", &partition_entropy, py::arg("probs"));
  m.def("fnv1a_hex", &fnv1a_hex, py::arg("data"));

  m.def(
      "sup_norm",
      [](py::array_t<cplx, py::array::c_style | py::array::forcecast> u, double box_length) {
        return sup_norm(to_field(u, box_length));
      },
      py::arg("u"), py::arg("box_length"));

  m.def(
      "evolve",
      [](py::array_t<cplx, py::array::c_style | py::array::forcecast> u0, double box_length, double alpha,
         double beta, double dt, double t_end, std::uint64_t seed) {
        const Field f = to_field(u0, box_length);
        ForcingProfile quiet;
        quiet.modes.push_back({{0.0, 0.0}, 0.0, 0.0});
        SolverConfig c;
        c.dt = dt;
        c.t_end = t_end;
        c.record_norms = false;
        c.record_stride = std::max(1, static_cast<int>(std::lround(t_end / dt)));
        const auto rec = evolve(f, sample_realization(quiet, seed, dt), make_params(alpha, beta, 1.0, 1), c);
        return to_array(rec.final_state);
      },
      "Deterministic evolution of a one-dimensional field without forcing.", py::arg("u0"), py::arg("box_length"),
      py::arg("alpha") = 0.5, py::arg("beta") = 0.5, py::arg("dt") = 1e-3, py::arg("t_end") = 1.0,
      py::arg("seed") = 0);

  m.def(
      "run_command",
      [](const std::string& command, const std::filesystem::path& config, std::optional<std::filesystem::path> out,
         std::optional<std::uint64_t> seed, int threads) {
        CommandOptions o;
        if (out) o.out = *out;
        o.seed = seed;
        o.threads = threads;
        std::ostringstream os, es;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_command(command, config, o, os, es);
        }
        return py::make_tuple(code, os.str(), es.str());
      },
      "Runs a CLI command in process; returns (exit_code, stdout, stderr).", py::arg("command"), py::arg("config"),
      py::arg("out") = py::none(), py::arg("seed") = py::none(), py::arg("threads") = 1);
}
