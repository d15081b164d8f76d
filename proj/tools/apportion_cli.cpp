#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "apportion/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Disaggregate building heating/cooling power, detect HVAC faults and rank them by energy loss"};
  app.require_subcommand(1);

  apportion::CommandOptions opt;
  std::string config, out;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "run config (INI); for synth, the scenario file")->required();
  app.add_option("--out", out, "output directory; overrides the config paths");
  app.add_flag("--strict", opt.strict, "fail on the first unparseable trend row");
  auto* seed_opt = app.add_option("--seed", seed, "synth: override the scenario seed");

  const char* commands[][2] = {
      {"validate", "check topology, point binding and data coverage"},
      {"fit", "calibrate the regression coefficients and write the model"},
      {"estimate", "write per-equipment power and estimated-vs-measured series"},
      {"detect", "run the fault rules and write findings"},
      {"report", "estimate energy loss per finding and write the prioritized table"},
      {"synth", "generate a synthetic scenario bundle"},
  };
  for (const auto& c : commands) app.add_subcommand(c[0], c[1])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  opt.config = config;
  if (!out.empty()) opt.out = out;
  if (seed_opt->count() > 0) opt.seed = seed;
  return apportion::run_command(app.get_subcommands().front()->get_name(), opt, std::cout, std::cerr);
}
