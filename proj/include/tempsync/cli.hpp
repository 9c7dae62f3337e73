#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace tsync {

struct CliConfig {
  std::string command;        // simulate | certify | cluster-certify | threshold | scenario | pullback-check
  std::string scenario_name;  // for `scenario`: vdp | ring | fhn | lorenz
  std::filesystem::path config_path;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;  // defaults to 0, or the config's "seed"
  std::optional<double> t_end;
  std::optional<double> dt;
  std::optional<double> c;
  std::optional<double> epsilon;
  std::optional<double> bound_M;
  std::size_t workers = 0;  // 0: SYNC_TOOLKIT_WORKERS or hardware concurrency
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFails = 2;

/// Runs one command. Exit 0 on success, 2 when a certificate or scenario
/// predicate fails (report still written), 1 on usage, schema or IO errors.
int dispatch(const CliConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace tsync
