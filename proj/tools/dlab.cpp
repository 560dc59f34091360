// dlab <dilate|reverse|torus|mrange|demo-main2> --config <path> [--out <dir>]
//      [--format json|csv|both] [--seed <u64>] [--tol <float>]
//
// Exit status: 0 when every ledger passes, 2 when a ledger fails, 1 on
// configuration or I/O errors.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dlab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dilation experiments for almost commuting unitary tuples"};
  app.require_subcommand(1);

  std::string config, out, format;
  std::uint64_t seed = 0;
  double tol = 0.0;
  for (const char* name : {"dilate", "reverse", "torus", "mrange", "demo-main2"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_option("--seed", seed, "base seed (replaces the config seeds)");
    sub->add_option("--tol", tol, "tolerance")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  const CLI::App* sub = app.get_subcommands().front();

  try {
    dlab::ExperimentConfig cfg = dlab::load_config(sub->get_name(), config);
    if (sub->count("--out")) cfg.out_dir = out;
    if (sub->count("--format")) cfg.format = format;
    if (sub->count("--seed")) cfg.seeds = {seed};
    if (sub->count("--tol")) cfg.tol = tol;
    dlab::Report report = dlab::run_command(cfg);
    for (const auto& line : dlab::write_report(report, cfg)) std::clog << line << '\n';
    std::clog << sub->get_name() << ": " << (report.pass ? "all claims pass" : "ledger failure") << '\n';
    return dlab::exit_code(report);
  } catch (const dlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
  } catch (const dlab::CapExceeded& e) {
    std::cerr << "error: size cap: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}
