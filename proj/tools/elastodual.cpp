// Command-line front end.
//
//   elastodual <command> --config <path> [--out <path>] [--format json|csv-series]
//              [--grid-override nx,ny,nz] [--seed N] [--deterministic on|off]
//
// Exit status: 0 success, 1 validation error, 2 numerical failure.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "elastodual/report.hpp"

namespace ed = elastodual;

int main(int argc, char** argv) {
  CLI::App app{"Primal and dual solvers for Saint Venant-Kirchhoff elasticity"};
  app.require_subcommand(1, 1);

  std::string config_path, out_path, format = "json", grid_override;
  std::optional<std::string> deterministic;
  std::optional<std::uint64_t> seed;
  for (const std::string& name : ed::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_path, "output file (default: stdout)");
    sub->add_option("--format", format, "json or csv-series")->check(CLI::IsMember({"json", "csv-series"}));
    sub->add_option("--grid-override", grid_override, "node counts nx,ny,nz");
    sub->add_option("--seed", seed, "seed for sampled checks");
    sub->add_option("--deterministic", deterministic, "on or off")->check(CLI::IsMember({"on", "off"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    ed::ExperimentConfig cfg = ed::parse_config(config_path);
    if (!grid_override.empty()) cfg.grid.dims = ed::detail::to_dims("--grid-override", grid_override);
    if (seed) cfg.seed = *seed;
    if (deterministic) cfg.deterministic = (*deterministic == "on");

    const ed::RunOutcome outcome = ed::run_command(cmd, cfg);
    if (format == "csv-series" && !outcome.series) throw ed::ValidationError("command '" + cmd + "' has no data series");

    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) throw ed::ValidationError("cannot open output file '" + out_path + "'");
    }
    std::ostream& os = out_path.empty() ? std::cout : file;
    if (format == "json") {
      ed::emit_json(os, outcome.document);
    } else {
      ed::emit_csv(os, *outcome.series);
    }
    os.flush();
    if (!os) throw ed::ValidationError("write failed");
    if (outcome.numerical_failure) {
      std::cerr << "elastodual: solver did not converge\n";
      return 2;
    }
    return 0;
  } catch (const ed::ValidationError& e) {
    std::cerr << "elastodual: " << e.what() << '\n';
    return 1;
  } catch (const ed::NumericalError& e) {
    std::cerr << "elastodual: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "elastodual: " << e.what() << '\n';
    return 2;
  }
}
