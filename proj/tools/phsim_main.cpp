#include <complex>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phsim/driver.hpp"

namespace {

// "1", "-0.5", "0.5+3i", "2-1i"
std::complex<double> parse_complex(const std::string& s) {
  double re = 0.0, im = 0.0;
  std::size_t pos = 0;
  re = std::stod(s, &pos);
  if (pos < s.size()) {
    std::string rest = s.substr(pos);
    if (rest.back() == 'i' || rest.back() == 'j') {
      rest.pop_back();
      im = rest.empty() || rest == "+" ? 1.0 : (rest == "-" ? -1.0 : std::stod(rest));
    } else {
      throw std::invalid_argument("cannot parse complex number: " + s);
    }
  }
  return {re, im};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and verification toolkit for 1-D port-Hamiltonian systems "
               "with nonlinear monotone boundary feedback"};
  app.require_subcommand(1);

  std::string config_path;
  std::string profile_flag;
  std::vector<std::string> lambda_args;
  std::string transfer_out = "transfer.csv";
  int jobs = 1;

  auto* run = app.add_subcommand("run", "simulate a closed loop and write trace.csv / summary.json");
  run->add_option("config", config_path, "JSON run configuration")->required();

  auto* check = app.add_subcommand("check", "evaluate the stability condition reports");
  check->add_option("config", config_path, "JSON run configuration")->required();
  check->add_option("--profile", profile_flag, "force a profile: n1 | n2 | eb");

  auto* transfer = app.add_subcommand("transfer", "evaluate G(lambda) on a grid");
  transfer->add_option("config", config_path, "JSON run configuration")->required();
  transfer->add_option("--lambda", lambda_args, "lambda values, e.g. 1 2 0.5+3i")->required();
  transfer->add_option("--out", transfer_out, "output CSV path");

  auto* sweep = app.add_subcommand("sweep", "run a family of configurations");
  sweep->add_option("config", config_path, "JSON sweep configuration")->required();
  sweep->add_option("--jobs", jobs, "concurrent runs");

  auto* list = app.add_subcommand("list", "list the scenario catalog");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) return phsim::cmd_list(std::cout);
    const auto config = phsim::load_config_file(config_path);
    if (run->parsed()) return phsim::cmd_run(config, std::cerr);
    if (check->parsed())
      return phsim::cmd_check(config, profile_flag, std::cout, std::cerr);
    if (transfer->parsed()) {
      std::vector<std::complex<double>> lambdas;
      for (const auto& s : lambda_args) lambdas.push_back(parse_complex(s));
      return phsim::cmd_transfer(config, lambdas, transfer_out, std::cerr);
    }
    if (sweep->parsed()) return phsim::cmd_sweep(config, jobs, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return phsim::kExitConfigError;
  }
  return phsim::kExitConfigError;
}
