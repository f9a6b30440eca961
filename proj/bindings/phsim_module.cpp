#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "phsim/driver.hpp"
#include "phsim/transfer.hpp"

namespace py = pybind11;
using namespace phsim;
using nlohmann::json;

namespace {

json parse_json_arg(const std::string& text) {
  return text.empty() ? json::object() : json::parse(text);
}

py::dict trace_to_dict(const EnergyTrace& tr) {
  py::dict d;
  const auto as_array = [](const std::vector<double>& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
  };
  d["t"] = as_array(tr.times);
  d["E_state"] = as_array(tr.E_state);
  d["E_ctrl"] = as_array(tr.E_ctrl);
  d["power_residual"] = as_array(tr.power_residual);
  d["diffquot_norm"] = as_array(tr.diffquot_norm);
  py::array_t<double> u({tr.size(), static_cast<std::size_t>(tr.port_dim)});
  py::array_t<double> y({tr.size(), static_cast<std::size_t>(tr.port_dim)});
  for (std::size_t k = 0; k < tr.size(); ++k)
    for (int i = 0; i < tr.port_dim; ++i) {
      u.mutable_at(k, i) = tr.u[k](i);
      y.mutable_at(k, i) = tr.y[k](i);
    }
  d["u"] = u;
  d["y"] = y;
  return d;
}

py::dict condition_to_dict(const ConditionReport& rep) {
  py::dict d;
  d["name"] = rep.name;
  d["lhs"] = rep.lhs;
  d["threshold"] = rep.threshold;
  d["pass"] = rep.pass;
  py::dict terms;
  for (const auto& [k, v] : rep.terms) terms[py::str(k)] = v;
  d["terms"] = terms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_phsim, m) {
  m.doc() = "Structure-preserving simulator for 1-D port-Hamiltonian systems with "
            "nonlinear monotone boundary feedback";

  // ---- dense kit ----
  m.def("mat_exp", py::overload_cast<const Matrix&>(&mat_exp), py::arg("A"),
        "Matrix exponential by scaling-and-squaring (Pade 13).");
  m.def("mat_exp_complex", py::overload_cast<const CMatrix&>(&mat_exp), py::arg("A"));
  m.def("solve_dense", py::overload_cast<const Matrix&, const Matrix&>(&solve_dense),
        py::arg("A"), py::arg("B"));
  m.def("sym_part_bounds", py::overload_cast<const Matrix&>(&sym_part_bounds), py::arg("A"),
        "Extremal eigenvalues of the symmetric part.");

  // ---- monotone maps ----
  py::class_<MonotoneMap>(m, "MonotoneMap")
      .def_static("zero", &MonotoneMap::zero, py::arg("n"))
      .def_static("linear", &MonotoneMap::linear, py::arg("S"))
      .def_static("relay", py::overload_cast<int, double>(&MonotoneMap::relay),
                  py::arg("n"), py::arg("level"))
      .def_static("saturation", &MonotoneMap::saturation, py::arg("n"), py::arg("gain"),
                  py::arg("u_max"))
      .def_static("deadzone", &MonotoneMap::deadzone, py::arg("n"), py::arg("width"))
      .def_static("power_law", &MonotoneMap::power_law, py::arg("n"), py::arg("p"))
      .def_static("blocks", &MonotoneMap::blocks, py::arg("parts"))
      .def_property_readonly("dim", &MonotoneMap::dim)
      .def("resolve", &MonotoneMap::resolve, py::arg("alpha"), py::arg("v"))
      .def("minimal_section", &MonotoneMap::minimal_section, py::arg("v"))
      .def("graph_distance", &MonotoneMap::graph_distance, py::arg("v"), py::arg("w"));

  m.def(
      "verify_monotone",
      [](const MonotoneMap& phi, int trials, std::uint64_t seed) {
        const auto rep = verify_monotone(phi, trials, seed);
        py::dict d;
        d["ok"] = rep.ok;
        d["worst_pairing"] = rep.worst_pairing;
        return d;
      },
      py::arg("phi"), py::arg("trials") = 200, py::arg("seed") = 0);
  m.def(
      "verify_sector",
      [](const MonotoneMap& phi, double kappa, int samples, double v_min, double v_max,
         std::uint64_t seed) {
        const auto rep = verify_sector(phi, kappa, samples, v_min, v_max, seed);
        py::dict d;
        d["ok"] = rep.ok;
        d["kappa_tilde"] = rep.kappa_tilde;
        return d;
      },
      py::arg("phi"), py::arg("kappa"), py::arg("samples") = 400, py::arg("v_min") = 1e-6,
      py::arg("v_max") = 1e3, py::arg("seed") = 0);

  // ---- model ----
  py::class_<PhsModel, std::shared_ptr<PhsModel>>(m, "PhsModel")
      .def_property_readonly("order", &PhsModel::order)
      .def_property_readonly("dim", &PhsModel::dim)
      .def_property_readonly("port_dim", &PhsModel::port_dim)
      .def("Q", [](const PhsModel& mo) { return mo.Q(); })
      .def("R_ext", [](const PhsModel& mo) { return mo.R_ext(); })
      .def("extract_ports", [](const PhsModel& mo, const Vector& trace) {
        const PortVector p = mo.extract_ports(trace);
        py::dict d;
        d["f"] = p.f;
        d["e"] = p.e;
        d["u"] = p.u;
        d["y"] = p.y;
        return d;
      });

  m.def(
      "make_model",
      [](int order, int dim, const std::vector<Matrix>& P, const Matrix& H,
         const Matrix& trace_u, const Matrix& trace_y) {
        ModelDesc desc;
        desc.order = order;
        desc.dim = dim;
        desc.P = P;
        desc.H = Hamiltonian::constant(H);
        std::tie(desc.W_B, desc.W_C) =
            ports_from_trace_selectors(P, order, dim, trace_u, trace_y);
        return std::make_shared<PhsModel>(build_model(desc));
      },
      py::arg("order"), py::arg("dim"), py::arg("P"), py::arg("H"), py::arg("trace_u"),
      py::arg("trace_y"),
      "Build a constant-H model; trace_u/trace_y select port components from the "
      "raw boundary trace stack.");

  m.def(
      "sample_passivity",
      [](std::shared_ptr<PhsModel> model, int trials, std::uint64_t seed) {
        const auto rep = sample_passivity(*model, trials, seed);
        py::dict d;
        d["ok"] = rep.ok;
        d["worst_margin"] = rep.worst_margin;
        d["scale"] = rep.scale;
        return d;
      },
      py::arg("model"), py::arg("trials") = 50, py::arg("seed") = 0);

  m.def(
      "transfer_at",
      [](std::shared_ptr<PhsModel> model, Complex lam) {
        const auto ev = transfer_at(*model, lam);
        py::dict d;
        d["G"] = ev.G;
        d["min_sym_eig"] = ev.min_sym_eig;
        d["boundary_condition"] = ev.boundary_system_condition;
        return d;
      },
      py::arg("model"), py::arg("lam"));

  m.def(
      "check_order2_condition",
      [](std::shared_ptr<PhsModel> model) { return condition_to_dict(check_order2_condition(*model)); },
      py::arg("model"));
  m.def(
      "check_eb_condition",
      [](std::shared_ptr<PhsModel> model) { return condition_to_dict(check_eb_condition(*model)); },
      py::arg("model"));

  // ---- scenarios and runs ----
  m.def("list_scenarios", []() {
    py::list out;
    for (const auto& s : list_scenarios()) {
      py::dict d;
      d["name"] = s.name;
      d["note"] = s.note;
      d["tag"] = s.tag;
      out.append(d);
    }
    return out;
  });

  py::class_<Instantiated>(m, "Scenario")
      .def_property_readonly("tag", [](const Instantiated& i) { return i.tag; })
      .def_property_readonly("x0", [](const Instantiated& i) { return i.x0; })
      .def_property_readonly("model",
                             [](const Instantiated& i) {
                               return std::const_pointer_cast<PhsModel>(
                                   std::static_pointer_cast<const PhsModel>(i.model));
                             })
      .def("run", [](const Instantiated& i) { return trace_to_dict(run(i.loop, i.x0, i.xc0)); });

  m.def(
      "instantiate",
      [](const std::string& name, const std::string& overrides_json, std::uint64_t seed) {
        return instantiate(name, parse_json_arg(overrides_json), seed);
      },
      py::arg("name"), py::arg("overrides_json") = std::string(), py::arg("seed") = 0);

  m.def(
      "estimate_decay",
      [](const std::vector<double>& t, const std::vector<double>& E, double window) {
        const auto fit = estimate_decay(t, E, window);
        py::dict d;
        d["omega_hat"] = fit.omega_hat;
        d["M_hat"] = fit.M_hat;
        d["fit_quality"] = fit.fit_quality;
        return d;
      },
      py::arg("t"), py::arg("E"), py::arg("window_fraction") = 0.5);

  m.def(
      "run_config",
      [](const std::string& config_json) {
        std::ostringstream err;
        const int rc = cmd_run(json::parse(config_json), err);
        py::dict d;
        d["exit_code"] = rc;
        d["stderr"] = err.str();
        return d;
      },
      py::arg("config_json"), "Run a full JSON configuration as the CLI would.");

  m.attr("__version__") = "0.1.0";
}
