#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "myopia/experiment.hpp"

using namespace myopia::cli;

namespace {

std::string error_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing fills defaults") {
  const ExperimentConfig c = parse_config(json{{"experiment", "kelly"}, {"seed", 7}, {"output_dir", "x"}});
  CHECK(c.seed == 7);
  CHECK(c.params["p"] == 0.6);
  CHECK(c.params["n_max"] == 10);
  CHECK(c.wants("csv"));
  CHECK(c.wants("json"));
  CHECK_FALSE(c.wants("svg"));
  CHECK(c.output_dir == "x");
}

TEST_CASE("strict parsing names the offending key") {
  CHECK(error_of(json{{"experiment", "kelly"}}).find("'seed'") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}}).find("'experiment'") != std::string::npos);
  CHECK(error_of(json{{"experiment", "kelly"}, {"seed", 1}, {"colour", "red"}}).find("'colour'") != std::string::npos);
  CHECK(error_of(json{{"experiment", "kelly"}, {"seed", 1}, {"params", {{"q", 0.3}}}}).find("'params.q'") !=
        std::string::npos);
  CHECK(error_of(json{{"experiment", "arena"}, {"seed", 1}, {"params", {{"market", {{"kappa", 1.0}}}}}})
            .find("'params.market.kappa'") != std::string::npos);
  CHECK(error_of(json{{"experiment", "kelly"}, {"seed", 1}, {"params", {{"n_max", 2.5}}}}).find("'params.n_max'") !=
        std::string::npos);
  CHECK(error_of(json{{"experiment", "kelly"}, {"seed", -1}}).find("'seed'") != std::string::npos);
  CHECK(error_of(json{{"experiment", "poker"}, {"seed", 1}}).find("'experiment'") != std::string::npos);
  CHECK(error_of(json{{"experiment", "kelly"}, {"seed", 1}, {"formats", {"pdf"}}}).find("'formats'") !=
        std::string::npos);
}

TEST_CASE("market type selects the nested defaults") {
  const ExperimentConfig c = parse_config(
      json{{"experiment", "arena"}, {"seed", 1}, {"params", {{"market", {{"type", "trend_ou"}, {"kappa", 2.0}}}}}});
  CHECK(c.params["market"]["kappa"] == 2.0);
  CHECK(c.params["market"]["mu"] == 10.0);
  CHECK(c.params["policies"][0] == "buy_and_hold");
}

TEST_CASE("every preset parses") {
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    CHECK_NOTHROW(parse_config(preset(name)));
  }
  CHECK(preset("myopic-vs-global") == preset("local-vs-global"));
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("flags override presets") {
  CliRequest req;
  req.subcommand = "arena";
  req.preset = "local-vs-global";
  req.seed = 99;
  req.threads = 3;
  req.output_dir = "out";
  req.param_overrides = {"seeds=7", "market.rounds=50"};
  const ExperimentConfig c = build_config(req);
  CHECK(c.seed == 99);
  CHECK(c.threads == 3);
  CHECK(c.params["seeds"] == 7);
  CHECK(c.params["market"]["rounds"] == 50);
  CHECK(c.params["market"]["n_games"] == 10);

  CliRequest mismatch;
  mismatch.subcommand = "kelly";
  mismatch.preset = "lottery-pump";
  CHECK_THROWS_AS(build_config(mismatch), ConfigError);

  CliRequest flags_only;
  flags_only.subcommand = "kelly";
  flags_only.output_dir = "o";
  CHECK(build_config(flags_only).seed == 42);
}

TEST_CASE("config files must carry a seed") {
  const auto dir = std::filesystem::temp_directory_path() / "myopia_test_cfg";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "a.json") << R"({"experiment": "kelly", "params": {"p": 0.7}})";
  CliRequest req;
  req.subcommand = "run";
  req.config_file = dir / "a.json";
  try {
    build_config(req);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'seed'") != std::string::npos);
  }
  std::ofstream(dir / "b.json") << R"({"experiment": "kelly", "seed": 3, "params": {"p": 0.7}})";
  req.config_file = dir / "b.json";
  const ExperimentConfig c = build_config(req);
  CHECK(c.params["p"] == 0.7);
  CHECK(c.seed == 3);
}

TEST_CASE("kelly experiment rows") {
  const RunOutput out = run_experiment(parse_config(json{{"experiment", "kelly"}, {"seed", 1}, {"output_dir", "x"}}));
  int paper_rows = 0;
  for (const ResultRow& r : out.rows) {
    if (r.metric == "paper_fraction") ++paper_rows;
    if (r.key == "n=3" && r.metric == "fraction_gap") CHECK(r.value == doctest::Approx(0.55259578483447838 - 0.5428571428571429).epsilon(1e-7));
  }
  CHECK(paper_rows == 10);
  CHECK(out.summary["table"].size() == 10);
}

TEST_CASE("CSV round trip keeps every bit") {
  const std::vector<ResultRow> rows{{"arena", 5, "a>b", "win_rate", 0.1 + 0.2},
                                    {"arena", 5, "x,\"y\"", "m", -1.0 / 3.0},
                                    {"arena", 5, "p|x=2", "v", 1e-300}};
  const std::string text = format_results_csv(rows);
  CHECK(text.rfind("experiment,seed,key,metric,value\n", 0) == 0);
  const std::vector<ResultRow> back = parse_results_csv(text);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].key == rows[i].key);
    CHECK(back[i].value == rows[i].value);
  }
}

TEST_CASE("charts come from chart rows only") {
  CHECK_FALSE(render_chart({{"k", 1, "plain", "m", 1.0}}, "t").has_value());
  const auto svg = render_chart({{"k", 1, "n|x=1", "a", 0.2}, {"k", 1, "n|x=2", "a", 0.38}, {"k", 1, "n|x=1", "b", 0.1}},
                                "growth <&>");
  REQUIRE(svg.has_value());
  CHECK(svg->find("<svg") == 0);
  CHECK(svg->find("<polyline") != std::string::npos);
  CHECK(svg->find("growth &lt;&amp;&gt;") != std::string::npos);
}

TEST_CASE("run writes artifacts and the same bytes at any thread count") {
  const auto base = std::filesystem::temp_directory_path() / "myopia_test_run";
  std::filesystem::remove_all(base);
  std::string csv[2];
  for (int k = 0; k < 2; ++k) {
    json doc = preset("local-vs-global");
    doc["params"]["seeds"] = 6;
    doc["params"]["market"]["rounds"] = 300;
    doc["threads"] = k == 0 ? 1 : 8;
    doc["output_dir"] = (base / std::to_string(k)).string();
    doc["formats"] = {"csv", "json", "svg"};
    std::ostringstream log;
    REQUIRE(run(parse_config(doc), log) == kExitOk);
    csv[k] = slurp(base / std::to_string(k) / "results.csv");
    const json manifest = json::parse(slurp(base / std::to_string(k) / "manifest.json"));
    CHECK(manifest["status"] == "ok");
    CHECK(manifest["master_seed"] == 20240601);
    CHECK(manifest["config"]["params"]["seeds"] == 6);
    CHECK(std::filesystem::exists(base / std::to_string(k) / "chart.svg"));
    CHECK(std::filesystem::exists(base / std::to_string(k) / "summary.json"));
  }
  CHECK(csv[0] == csv[1]);
}

TEST_CASE("a failed run leaves a manifest saying so") {
  const auto dir = std::filesystem::temp_directory_path() / "myopia_test_fail";
  std::filesystem::remove_all(dir);
  json doc{{"experiment", "kelly"}, {"seed", 1}, {"output_dir", dir.string()}, {"params", {{"p", 0.3}}}};
  std::ostringstream log;
  CHECK(run(parse_config(doc), log) == kExitConfig);
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["status"] == "failed");
  CHECK(manifest["error"].get<std::string>().find("'params.p'") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "results.csv"));
}

TEST_CASE("output directory falls back to the environment") {
  ::setenv(kOutputDirEnv, "/tmp/from-env", 1);
  CHECK(parse_config(json{{"experiment", "kelly"}, {"seed", 1}}).output_dir == "/tmp/from-env");
  ::unsetenv(kOutputDirEnv);
  CHECK(parse_config(json{{"experiment", "kelly"}, {"seed", 1}}).output_dir == "myopia-out");
}
