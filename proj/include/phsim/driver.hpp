#pragma once

#include <filesystem>
#include <iosfwd>

#include <nlohmann/json_fwd.hpp>

#include "phsim/scenarios.hpp"

namespace phsim {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitNonconvergence = 2;
inline constexpr int kExitCheckFailed = 3;

struct RunSetup {
  Instantiated inst;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  bool emit_trace = true;
  bool emit_summary = true;
};

/// Parses a full run configuration (scenario + overrides, or inline
/// model/feedback/grid/time). Throws on malformed configs; exactly one of
/// "scenario" / "inline" must be present.
RunSetup parse_run_config(const nlohmann::json& config);

nlohmann::json load_config_file(const std::filesystem::path& path);

void write_trace_csv(const std::filesystem::path& path, const EnergyTrace& trace);

int cmd_run(const nlohmann::json& config, std::ostream& err);
int cmd_check(const nlohmann::json& config, const std::string& profile_flag,
              std::ostream& out, std::ostream& err);
int cmd_transfer(const nlohmann::json& config, const std::vector<Complex>& lambdas,
                 const std::filesystem::path& out_csv, std::ostream& err);
int cmd_sweep(const nlohmann::json& config, int jobs, std::ostream& err);
int cmd_list(std::ostream& out);

}  // namespace phsim
