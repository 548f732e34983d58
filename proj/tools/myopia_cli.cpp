#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "myopia/experiment.hpp"

namespace cli = myopia::cli;

namespace {

struct Shortcut {
  const char* flag;
  const char* param;
  const char* help;
};

struct Command {
  CLI::App* app = nullptr;
  cli::CliRequest request;
  std::vector<std::string> shortcut_storage;
};

void add_common(CLI::App* sub, cli::CliRequest& req) {
  sub->add_option_function<std::string>("--config", [&req](const std::string& f) { req.config_file = f; },
                                         "JSON configuration file");
  sub->add_option_function<std::string>("--preset", [&req](const std::string& p) { req.preset = p; },
                                         "Named preset to start from");
  sub->add_option_function<std::uint64_t>("--seed", [&req](std::uint64_t s) { req.seed = s; }, "Master seed");
  sub->add_option_function<unsigned>("--threads", [&req](unsigned t) { req.threads = t; }, "Worker threads")
      ->check(CLI::PositiveNumber);
  sub->add_option_function<std::string>("--out", [&req](const std::string& d) { req.output_dir = d; },
                                         "Output directory (default: $" + std::string(cli::kOutputDirEnv) +
                                             " or ./myopia-out)");
  sub->add_flag("--svg", req.svg, "Also write chart.svg");
  sub->add_option("--param", req.param_overrides, "Parameter override, dotted.key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulations of local versus global optimisation by myopic investors"};
  app.set_version_flag("--version", std::string(cli::kToolName) + " " + cli::kToolVersion);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::vector<Shortcut>>> layout = {
      {"kelly",
       {{"--p", "p", "Win probability of each game"}, {"--n-max", "n_max", "Largest number of simultaneous games"}}},
      {"lottery", {{"--draws", "draws", "Monte Carlo draws per number"}}},
      {"sde", {{"--paths", "paths", "Number of simulated paths"}}},
      {"arena", {{"--seeds", "seeds", "Number of paired seeds"}}},
      {"hedge", {{"--paths", "paths", "Number of simulated paths"}}},
      {"impact", {}},
      {"run", {}},
  };
  const std::map<std::string, std::string> blurbs = {
      {"kelly", "Closed-form vs numerically optimal Kelly fraction over n simultaneous games"},
      {"lottery", "Expected value of each number in a shared-jackpot lottery"},
      {"sde", "Simulated vs analytic moments of the market models"},
      {"arena", "Race sizing policies on common random numbers"},
      {"hedge", "Delta-hedge P&L against the dollar-gamma accrual"},
      {"impact", "Order-sequence asymmetry under power-law impact"},
      {"run", "Run the experiment named in a config file or preset"},
  };

  std::vector<Command> commands(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    Command& c = commands[i];
    c.request.subcommand = layout[i].first;
    c.app = app.add_subcommand(layout[i].first, blurbs.at(layout[i].first));
    add_common(c.app, c.request);
    c.shortcut_storage.resize(layout[i].second.size());
    for (std::size_t k = 0; k < layout[i].second.size(); ++k) {
      const Shortcut& s = layout[i].second[k];
      c.app->add_option(s.flag, c.shortcut_storage[k], s.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  for (std::size_t i = 0; i < layout.size(); ++i) {
    Command& c = commands[i];
    if (!c.app->parsed()) continue;
    for (std::size_t k = 0; k < layout[i].second.size(); ++k) {
      const Shortcut& s = layout[i].second[k];
      if (c.app->count(s.flag) > 0) c.request.param_overrides.push_back(std::string(s.param) + "=" + c.shortcut_storage[k]);
    }
    if (c.request.subcommand == "run" && !c.request.config_file && !c.request.preset) {
      std::cerr << "config error: run needs --config or --preset\n";
      return cli::kExitConfig;
    }
    try {
      const cli::ExperimentConfig config = cli::build_config(c.request);
      return cli::run(config, std::cout);
    } catch (const cli::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return cli::kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return cli::kExitRuntime;
    }
  }
  return cli::kExitConfig;
}
