// Experiment harness behind the dlab command line tool.
//
// A config is a JSON document. Keys shared by all commands:
//
//     "seed": u64, "seeds": [u64, ...], "tol": number,
//     "output": {"dir": path, "format": "json" | "csv" | "both"}
//
// Command line flags override these. Phase matrices ("theta") and tuples
// ("tuple", "source", "target", ...) are given inline or as a file path
// relative to the config file. Tuple sources:
//
//     {"matrices": [...]}                      inline matrices
//     {"file": path}                           {"matrices": [...]} on disk
//     {"generator": "weyl", "base": theta?, "ampliation": k?}
//     {"generator": "shift_diagonal", "r": [p, q], "ring": L}
//     {"generator": "random_almost", "base": theta, "dim": m, "delta": x}
//     {"generator": "haar", "d": d, "dim": m}
//
// Reports contain no timings, so equal configs give byte-identical JSON.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dlab/io.hpp"

namespace dlab {

struct ExperimentConfig {
  std::string command;
  ojson raw = ojson::object();
  std::filesystem::path base_dir = ".";
  std::vector<std::uint64_t> seeds{0};
  std::optional<double> tol;
  std::filesystem::path out_dir = ".";
  std::string format = "json";
};

/// Reads the shared keys; command line overrides are applied by the caller.
ExperimentConfig config_from_json(const std::string& command, const ojson& raw,
                                  const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::string& command, const std::filesystem::path& path);

struct Report {
  std::string command;
  ojson json;
  /// Ledger rows: seed,step,claimName,claimed,measured,pass.
  std::string csv;
  /// Optional one-row-per-run summary (dilate only).
  std::string summary_csv;
  bool pass = true;
};

Report cmd_dilate(const ExperimentConfig& cfg);
Report cmd_reverse(const ExperimentConfig& cfg);
Report cmd_torus(const ExperimentConfig& cfg);
Report cmd_mrange(const ExperimentConfig& cfg);
/// d = 2 end to end: an exactly r-commuting pair against an irrational target q.
Report cmd_main2_demo(const ExperimentConfig& cfg);

Report run_command(const ExperimentConfig& cfg);

/// Writes <out>/<command>.json and/or <command>.csv (and the summary CSV when
/// present), creating the directory if needed. Returns log lines.
std::vector<std::string> write_report(const Report& report, const ExperimentConfig& cfg);

/// 0 when every ledger passes, 2 otherwise.
inline int exit_code(const Report& r) { return r.pass ? 0 : 2; }

inline constexpr const char* kNormChoice = "tuple distance max_i ||X_i - Y_i|| (operator norm)";

}  // namespace dlab
