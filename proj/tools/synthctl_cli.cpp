// Command-line runner: panel CSV in, estimation/inference artifacts out.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "synthctl/pipeline.hpp"

int main(int argc, char** argv) {
  synthctl::RunOptions options;
  std::string v_mode = "uniform";
  std::string data;
  std::string out_dir = ".";

  CLI::App app{"Synthetic control estimation with placebo inference"};
  app.add_option("--data", data, "Long-format panel CSV (unit,time,value)")->required();
  app.add_option("--treated", options.treated, "Treated unit id")->required();
  app.add_option("--t0", options.t0, "Last untreated period")->required();
  auto* donors = app.add_option("--donors", options.donors, "Donor unit ids (default: all other units)")
                     ->delimiter(',');
  app.add_option("--exclude", options.exclude, "Unit ids removed from the default donor pool")
      ->delimiter(',')
      ->excludes(donors);
  app.add_option("--mspe-cutoff", options.mspe_cutoff,
                 "Hide placebos whose pre-MSPE is at least this multiple of the treated unit's")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--v-mode", v_mode, "Predictor weighting")
      ->capture_default_str()
      ->check(CLI::IsMember({"uniform", "nested"}));
  app.add_option("--placebo-t0", options.placebo_t0, "Run an in-time placebo with this last untreated period");
  app.add_flag("--leave-one-out", options.leave_one_out, "Refit without each positive-weight donor");
  app.add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", options.seed, "Seed recorded in summary.txt")->capture_default_str();
  app.add_option("--jobs", options.jobs, "Worker threads for placebo and leave-one-out refits")
      ->capture_default_str()
      ->check(CLI::Range(1u, 1024u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  options.data = data;
  options.out_dir = out_dir;
  options.v_mode = v_mode == "nested" ? synthctl::VMode::Nested : synthctl::VMode::Uniform;

  try {
    const auto artifacts = synthctl::run_study(options);
    synthctl::write_artifacts(options.out_dir, artifacts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
