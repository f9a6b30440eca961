#include "phsim/driver.hpp"

#include <charconv>
#include <fstream>
#include <future>
#include <iostream>

#include <nlohmann/json.hpp>

#include "phsim/transfer.hpp"

namespace phsim {
namespace {

using nlohmann::json;

// locale-independent shortest round-trip formatting
std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

Matrix parse_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw std::invalid_argument(std::string(what) + ": nested array expected");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.front().size());
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw std::invalid_argument(std::string(what) + ": ragged rows");
    for (int c = 0; c < cols; ++c) M(i, c) = j[i][c].get<double>();
  }
  return M;
}

Hamiltonian parse_hamiltonian(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return Hamiltonian::constant(parse_matrix(j.at("matrix"), "H"));
  if (kind == "table") {
    std::vector<Matrix> nodes;
    for (const auto& nj : j.at("nodes")) nodes.push_back(parse_matrix(nj, "H node"));
    return Hamiltonian::table(std::move(nodes));
  }
  if (kind == "profiles") {
    std::vector<ScalarProfile> entries;
    for (const auto& pj : j.at("entries")) {
      const std::string pk = pj.at("kind").get<std::string>();
      const double a = pj.value("a", 1.0), b = pj.value("b", 0.0);
      if (pk == "constant")
        entries.push_back(ScalarProfile::constant(a));
      else if (pk == "affine")
        entries.push_back(ScalarProfile::affine(a, b));
      else if (pk == "exp")
        entries.push_back(ScalarProfile::exponential(a, b));
      else
        throw std::invalid_argument("hamiltonian profile kind: " + pk);
    }
    return Hamiltonian::diag_profiles(std::move(entries));
  }
  throw std::invalid_argument("hamiltonian kind: " + kind);
}

MonotoneMap parse_monotone(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return MonotoneMap::zero(j.value("n", 1));
  if (kind == "linear") return MonotoneMap::linear(parse_matrix(j.at("matrix"), "linear map"));
  if (kind == "relay") {
    if (j.contains("levels")) {
      const auto& lv = j.at("levels");
      Vector levels(lv.size());
      for (std::size_t i = 0; i < lv.size(); ++i) levels(i) = lv[i].get<double>();
      return MonotoneMap::relay(levels);
    }
    return MonotoneMap::relay(j.value("n", 1), j.at("level").get<double>());
  }
  if (kind == "saturation")
    return MonotoneMap::saturation(j.value("n", 1), j.value("gain", 1.0),
                                   j.at("u_max").get<double>());
  if (kind == "deadzone")
    return MonotoneMap::deadzone(j.value("n", 1), j.at("width").get<double>());
  if (kind == "power")
    return MonotoneMap::power_law(j.value("n", 1), j.at("p").get<double>());
  if (kind == "blocks") {
    std::vector<MonotoneMap> parts;
    for (const auto& pj : j.at("blocks")) parts.push_back(parse_monotone(pj));
    return MonotoneMap::blocks(std::move(parts));
  }
  throw std::invalid_argument("monotone map kind: " + kind);
}

Controller parse_controller(const json& j) {
  MonotoneMap drift = parse_monotone(j.at("drift"));
  Matrix B_c = parse_matrix(j.at("B_c"), "B_c");
  MonotoneMap D_c = parse_monotone(j.at("D_c"));
  const int Nd = static_cast<int>(B_c.cols());
  Matrix Pi = j.contains("Pi") ? parse_matrix(j.at("Pi"), "Pi") : Matrix::Identity(Nd, Nd);
  Matrix W = j.contains("weight") ? parse_matrix(j.at("weight"), "weight")
                                  : Matrix::Identity(drift.dim(), drift.dim());
  return Controller::collocated(std::move(drift), std::move(B_c), std::move(D_c),
                                std::move(Pi), std::move(W));
}

Instantiated parse_inline(const json& j, std::uint64_t /*seed*/) {
  const json& mj = j.at("model");
  ModelDesc desc;
  desc.order = mj.at("order").get<int>();
  desc.dim = mj.at("dim").get<int>();
  for (const auto& pj : mj.at("P")) desc.P.push_back(parse_matrix(pj, "P_k"));
  desc.H = parse_hamiltonian(mj.at("hamiltonian"));
  if (mj.contains("trace_ports")) {
    // selectors on the raw trace stack: u = N_B * trace, y = N_C * trace
    const Matrix NB = parse_matrix(mj.at("trace_ports").at("u"), "trace_ports.u");
    const Matrix NC = parse_matrix(mj.at("trace_ports").at("y"), "trace_ports.y");
    std::tie(desc.W_B, desc.W_C) =
        ports_from_trace_selectors(desc.P, desc.order, desc.dim, NB, NC);
  } else {
    desc.W_B = parse_matrix(mj.at("W_B"), "W_B");
    desc.W_C = parse_matrix(mj.at("W_C"), "W_C");
  }

  Instantiated inst;
  inst.model = std::make_shared<PhsModel>(build_model(desc));
  const json& gj = j.at("grid");
  auto sys = std::make_shared<DiscreteSystem>(build_discrete(
      inst.model, gj.at("n_cells").get<int>(), gj.value("dissipation", 0.0)));
  inst.loop.system = sys;

  const json& fj = j.at("feedback");
  if (fj.contains("static") == fj.contains("controller"))
    throw std::invalid_argument("feedback: exactly one of 'static' / 'controller'");
  if (fj.contains("static")) {
    inst.loop.static_feedback = parse_monotone(fj.at("static"));
  } else {
    inst.loop.controller = parse_controller(fj.at("controller"));
    inst.xc0 = Vector::Zero(inst.loop.controller->n_c);
  }

  const json& tj = j.at("time");
  inst.loop.dt = tj.at("dt").get<double>();
  inst.loop.T = tj.at("T").get<double>();
  if (j.contains("solver")) {
    inst.loop.solver.tolerance = j.at("solver").value("tolerance", 1e-12);
    inst.loop.solver.max_iterations = j.at("solver").value("max_iterations", 10000);
  }
  const std::string st = tj.value("stepper", "midpoint");
  if (st == "midpoint")
    inst.loop.stepper = Stepper::Midpoint;
  else if (st == "backward-euler")
    inst.loop.stepper = Stepper::BackwardEuler;
  else
    throw std::invalid_argument("time.stepper: " + st);

  // initial datum: named bump profile or explicit nodal values
  const int m = sys->grid().nodes(), d = desc.dim;
  inst.x0 = Vector::Zero(m * d);
  if (j.contains("initial")) {
    const json& ij = j.at("initial");
    if (ij.contains("values")) {
      const auto& vals = ij.at("values");
      if (static_cast<int>(vals.size()) != m * d)
        throw std::invalid_argument("initial.values: expected n_nodes * dim entries");
      for (int i = 0; i < m * d; ++i) inst.x0(i) = vals[i].get<double>();
    } else {
      const double amp = ij.value("amplitude", 1.0);
      const double center = ij.value("center", 0.5);
      const double width = ij.value("width", 0.3);
      for (int jn = 0; jn < m; ++jn) {
        const double z = static_cast<double>(jn) / (m - 1);
        const double t = (z - center) / width;
        const double b = std::abs(t) < 1.0 ? std::pow(1.0 - t * t, 3) : 0.0;
        for (int c = 0; c < d; ++c) inst.x0(jn * d + c) = amp * b * (c == 0 ? 1.0 : 0.3);
      }
    }
  }
  inst.tag = j.value("tag", std::string("unspecified"));
  inst.profile = desc.order == 1 ? QProfile::N1
                                 : (is_eb_structured(*inst.model) ? QProfile::EB : QProfile::N2);
  inst.port_use.Pi_out = Matrix::Identity(inst.model->port_dim(), inst.model->port_dim());
  return inst;
}

}  // namespace

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  json j;
  in >> j;
  return j;
}

RunSetup parse_run_config(const json& config) {
  if (!config.is_object()) throw std::invalid_argument("config: object expected");
  const bool has_scenario = config.contains("scenario");
  const bool has_inline = config.contains("inline");
  if (has_scenario == has_inline)
    throw std::invalid_argument("config: exactly one of 'scenario' / 'inline' required");
  RunSetup setup;
  setup.seed = config.value("seed", 0ull);
  setup.output_dir = config.value("output_dir", std::string("out"));
  if (config.contains("emit")) {
    setup.emit_trace = config.at("emit").value("trace", true);
    setup.emit_summary = config.at("emit").value("summary", true);
  }
  if (has_scenario) {
    const json& sj = config.at("scenario");
    const std::string name =
        sj.is_string() ? sj.get<std::string>() : sj.at("name").get<std::string>();
    const json overrides = sj.is_object() ? sj.value("overrides", json::object()) : json::object();
    setup.inst = instantiate(name, overrides, setup.seed);
  } else {
    setup.inst = parse_inline(config.at("inline"), setup.seed);
  }
  return setup;
}

void write_trace_csv(const std::filesystem::path& path, const EnergyTrace& trace) {
  std::ofstream out(path, std::ios::binary);  // '\n' line feeds on every platform
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "t,E_state,E_ctrl,power_residual,diffquot_norm";
  for (int i = 1; i <= trace.port_dim; ++i) out << ",u_" << i;
  for (int i = 1; i <= trace.port_dim; ++i) out << ",y_" << i;
  out << "\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << fmt(trace.times[k]) << ',' << fmt(trace.E_state[k]) << ',' << fmt(trace.E_ctrl[k])
        << ',' << fmt(trace.power_residual[k]) << ',' << fmt(trace.diffquot_norm[k]);
    for (int i = 0; i < trace.port_dim; ++i) out << ',' << fmt(trace.u[k](i));
    for (int i = 0; i < trace.port_dim; ++i) out << ',' << fmt(trace.y[k](i));
    out << "\n";
  }
}

namespace {

json condition_report_json(const ConditionReport& rep) {
  json terms = json::object();
  for (const auto& [k, v] : rep.terms) terms[k] = v;
  return json{{"name", rep.name},
              {"lhs", std::isfinite(rep.lhs) ? json(rep.lhs) : json("inf")},
              {"threshold", std::isfinite(rep.threshold) ? json(rep.threshold) : json("inf")},
              {"pass", rep.pass},
              {"terms", terms}};
}

std::vector<ConditionReport> applicable_checks(const Instantiated& inst,
                                               const std::string& profile_flag) {
  const PhsModel& model = *inst.model;
  QProfile profile = inst.profile;
  if (!profile_flag.empty()) {
    if (profile_flag == "n1")
      profile = QProfile::N1;
    else if (profile_flag == "n2")
      profile = QProfile::N2;
    else if (profile_flag == "eb")
      profile = QProfile::EB;
    else
      throw std::invalid_argument("unknown profile: " + profile_flag);
    if ((profile == QProfile::N1) != (model.order() == 1))
      throw std::invalid_argument("profile does not match the model order");
    if (profile == QProfile::EB && !is_eb_structured(model))
      throw std::invalid_argument("profile eb requires the Euler-Bernoulli block structure");
  }
  std::vector<ConditionReport> reps;
  reps.push_back(check_boundary_bound(model, inst.port_use, profile));
  if (model.order() == 2) {
    reps.push_back(check_order2_condition(model));
    if (is_eb_structured(model)) reps.push_back(check_eb_condition(model));
  }
  return reps;
}

}  // namespace

int cmd_run(const json& config, std::ostream& err) {
  RunSetup setup;
  try {
    setup = parse_run_config(config);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    std::filesystem::create_directories(setup.output_dir);
    EnergyTrace trace = run(setup.inst.loop, setup.inst.x0, setup.inst.xc0);
    if (setup.emit_trace) write_trace_csv(setup.output_dir / "trace.csv", trace);
    if (setup.emit_summary) {
      json summary{{"schema", 1}};
      try {
        const DecayFit fit = estimate_decay(trace);
        summary["omega_hat"] = fit.omega_hat;
        summary["M_hat"] = fit.M_hat;
        summary["fit_quality"] = fit.fit_quality;
      } catch (const std::exception& e) {
        summary["decay_fit_error"] = e.what();
      }
      double worst_res = 0.0;
      for (double r : trace.power_residual) worst_res = std::max(worst_res, r);
      summary["solver"] = json{{"max_power_residual", worst_res},
                               {"steps", trace.size() - 1},
                               {"total_inner_iterations", trace.total_inner_iterations},
                               {"max_inner_iterations", trace.max_inner_iterations},
                               {"max_graph_residual", trace.max_graph_residual}};
      summary["E_initial"] = trace.E_state.front() + trace.E_ctrl.front();
      summary["E_final"] = trace.E_state.back() + trace.E_ctrl.back();
      json reports = json::array();
      for (const auto& rep : applicable_checks(setup.inst, ""))
        reports.push_back(condition_report_json(rep));
      summary["condition_reports"] = reports;
      std::ofstream out(setup.output_dir / "summary.json", std::ios::binary);
      out << summary.dump(2) << "\n";
    }
    return kExitOk;
  } catch (const NonconvergenceError& e) {
    err << "inner solver did not converge: " << e.what() << "\n";
    return kExitNonconvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

int cmd_check(const json& config, const std::string& profile_flag, std::ostream& out,
              std::ostream& err) {
  RunSetup setup;
  std::vector<ConditionReport> reps;
  try {
    setup = parse_run_config(config);
    reps = applicable_checks(setup.inst, profile_flag);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  bool all_pass = true;
  json out_json{{"schema", 1}};
  json arr = json::array();
  for (const auto& rep : reps) {
    arr.push_back(condition_report_json(rep));
    all_pass = all_pass && rep.pass;
  }
  out_json["reports"] = arr;
  out_json["all_pass"] = all_pass;
  out << out_json.dump(2) << "\n";
  return all_pass ? kExitOk : kExitCheckFailed;
}

int cmd_transfer(const json& config, const std::vector<Complex>& lambdas,
                 const std::filesystem::path& out_csv, std::ostream& err) {
  RunSetup setup;
  try {
    setup = parse_run_config(config);
    for (const Complex& lam : lambdas)
      if (lam.real() <= 0.0)
        throw std::invalid_argument("transfer: Re lambda must be > 0");
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + out_csv.string());
    const int Nd = setup.inst.model->port_dim();
    out << "lambda_re,lambda_im";
    for (int i = 1; i <= Nd; ++i)
      for (int j = 1; j <= Nd; ++j) out << ",G" << i << j << "_re,G" << i << j << "_im";
    out << ",min_sym_eig,boundary_condition\n";
    bool all_positive = true;
    for (const Complex& lam : lambdas) {
      const TransferEvaluation ev = transfer_at(*setup.inst.model, lam);
      out << fmt(lam.real()) << ',' << fmt(lam.imag());
      for (int i = 0; i < Nd; ++i)
        for (int j = 0; j < Nd; ++j)
          out << ',' << fmt(ev.G(i, j).real()) << ',' << fmt(ev.G(i, j).imag());
      out << ',' << fmt(ev.min_sym_eig) << ',' << fmt(ev.boundary_system_condition) << "\n";
      if (ev.min_sym_eig <= 0.0) all_positive = false;
    }
    return all_positive ? kExitOk : kExitCheckFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

int cmd_sweep(const json& config, int jobs, std::ostream& err) {
  json base;
  std::vector<json> runs;
  try {
    if (!config.contains("base") || !config.contains("runs"))
      throw std::invalid_argument("sweep config needs 'base' and 'runs'");
    base = config.at("base");
    for (const auto& rj : config.at("runs")) {
      if (!rj.contains("name")) throw std::invalid_argument("each sweep run needs a 'name'");
      runs.push_back(rj);
    }
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const std::filesystem::path root = base.value("output_dir", std::string("out"));
  std::vector<std::future<int>> futures;
  std::vector<std::string> messages(runs.size());
  int rc = kExitOk;
  const int batch = std::max(1, jobs);
  for (std::size_t i = 0; i < runs.size(); i += batch) {
    futures.clear();
    for (std::size_t k = i; k < std::min(runs.size(), i + batch); ++k) {
      futures.push_back(std::async(std::launch::async, [&, k]() {
        json cfg = base;
        const json& rj = runs[k];
        if (rj.contains("overrides")) {
          if (!cfg.contains("scenario") || !cfg.at("scenario").is_object())
            return kExitConfigError;
          json& ov = cfg.at("scenario")["overrides"];
          if (ov.is_null()) ov = json::object();
          for (auto it = rj.at("overrides").begin(); it != rj.at("overrides").end(); ++it)
            ov[it.key()] = it.value();
        }
        cfg["output_dir"] = (root / rj.at("name").get<std::string>()).string();
        std::ostringstream local_err;
        const int code = cmd_run(cfg, local_err);
        messages[k] = local_err.str();
        return code;
      }));
    }
    for (auto& f : futures) rc = std::max(rc, f.get());
  }
  for (const auto& msg : messages)
    if (!msg.empty()) err << msg;
  return rc;
}

int cmd_list(std::ostream& out) {
  for (const auto& info : list_scenarios())
    out << info.name << "  [" << info.tag << "]\n    " << info.note << "\n";
  return kExitOk;
}

}  // namespace phsim
