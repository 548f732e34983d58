#include "myopia/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "myopia/core.hpp"
#include "myopia/discrete_kelly.hpp"
#include "myopia/hedging.hpp"
#include "myopia/impact.hpp"
#include "myopia/lottery.hpp"
#include "myopia/sde_models.hpp"
#include "myopia/strategies.hpp"

namespace myopia::cli {

namespace {

// ---------------------------------------------------------------- parsing

std::string join_key(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_type(const json& expected, const json& given, const std::string& key) {
  auto fail = [&](const char* what) { throw ConfigError("key '" + key + "' must be " + what); };
  if (expected.is_null()) return;
  if (expected.is_number_integer() || expected.is_number_unsigned()) {
    if (!given.is_number_integer() && !given.is_number_unsigned()) fail("an integer");
  } else if (expected.is_number()) {
    if (!given.is_number()) fail("a number");
  } else if (expected.is_string()) {
    if (!given.is_string()) fail("a string");
  } else if (expected.is_boolean()) {
    if (!given.is_boolean()) fail("a boolean");
  } else if (expected.is_array()) {
    if (!given.is_array()) fail("an array");
  }
}

void strict_merge(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("key '" + path + "' must be an object");
  for (const auto& [k, v] : user.items()) {
    const std::string key = join_key(path, k);
    if (!base.contains(k)) throw ConfigError("unknown key '" + key + "'");
    json& slot = base[k];
    if (slot.is_object()) {
      strict_merge(slot, v, key);
      continue;
    }
    check_type(slot, v, key);
    slot = v;
  }
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError("key '" + key + "' " + message);
}

std::string nested_type(const json& user, const char* block, const char* fallback) {
  if (user.is_object() && user.contains(block) && user[block].is_object() && user[block].contains("type")) {
    if (!user[block]["type"].is_string()) throw ConfigError(std::string("key 'params.") + block + ".type' must be a string");
    return user[block]["type"].get<std::string>();
  }
  return fallback;
}

json model_defaults(const std::string& type, bool with_grid, const std::string& key) {
  json m;
  if (type == "discrete") {
    m = {{"type", type}, {"p", 0.6}, {"n_games", 10}, {"rounds", 10000}};
    return m;
  }
  if (type == "stochastic_drift") {
    m = {{"type", type}, {"r", 0.0},          {"sigma", 0.2},     {"kappa", 1.0},
         {"lambda_hat", 0.3}, {"sigma_hat", 0.4}, {"lambda0", 0.3}, {"s0", 1.0}};
  } else if (type == "trend_ou") {
    m = {{"type", type}, {"mu", 10.0}, {"kappa", 1.0}, {"sigma", 10.0}, {"s0", 100.0}, {"r", 0.0}};
  } else if (type == "gbm") {
    m = {{"type", type}, {"mu", 0.05}, {"sigma", 0.2}, {"s0", 1.0}, {"r", 0.0}};
  } else {
    throw ConfigError("key '" + key + ".type' must be one of discrete, stochastic_drift, trend_ou, gbm (got '" + type + "')");
  }
  if (with_grid) {
    m["t_end"] = 10.0;
    m["n_steps"] = 2500;
  }
  return m;
}


}  // namespace

bool ExperimentConfig::wants(std::string_view format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

json ExperimentConfig::to_json() const {
  return json{{"experiment", experiment}, {"seed", seed},     {"threads", threads},
              {"output_dir", output_dir.string()}, {"formats", formats}, {"params", params}};
}

json default_params(std::string_view experiment, const json& user) {
  if (experiment == "kelly") return json{{"p", 0.6}, {"n_max", 10}, {"tol", 1e-10}};
  if (experiment == "lottery")
    return json{{"popularity", {0.35, 0.25, 0.15, 0.12, 0.08, 0.05}},
                {"draw_distribution", json::array()},
                {"other_players", 20},
                {"jackpot", 6.0},
                {"ticket_price", 1.0},
                {"draws", 200000}};
  if (experiment == "sde") {
    const std::string type = nested_type(user, "model", "stochastic_drift");
    if (type == "discrete") throw ConfigError("key 'params.model.type' cannot be discrete for the sde experiment");
    return json{{"model", model_defaults(type, false, "params.model")},
                {"t_end", 10.0},
                {"n_steps", 1000},
                {"paths", 10000},
                {"sample_times", {0.5, 2.0, 10.0}}};
  }
  if (experiment == "arena") {
    const std::string type = nested_type(user, "market", "discrete");
    json market = model_defaults(type, true, "params.market");
    json policies = type == "discrete" ? json{"single_game_kelly", "multi_game_kelly:numeric", "multi_game_kelly:paper"}
                    : type == "stochastic_drift" ? json{"dynamic_kelly_ou", "static_kelly_ou"}
                    : type == "trend_ou"         ? json{"buy_and_hold", "trend_reversion:1"}
                                                 : json{"buy_and_hold", "static_kelly_ou"};
    return json{{"market", market}, {"policies", policies}, {"seeds", 100}};
  }
  if (experiment == "hedge")
    return json{{"strike", 1.0},         {"maturity", 1.0},     {"kind", "call"},  {"s0", 1.0},
                {"drift", 0.0},          {"implied_vol", 0.2},  {"realized_vol", 0.3},
                {"rate", 0.0},           {"path_steps", 1000},  {"rehedge_steps", {10, 100, 1000}},
                {"paths", 2000},         {"control", true}};
  if (experiment == "impact")
    return json{{"depth", 1.0},
                {"exponent", 0.5},
                {"decay", 1.0},
                {"permanent_share", 0.5},
                {"size", 10.0},
                {"separation", 0.5},
                {"hot", {{"depth", 1.0}, {"exponent", 0.5}, {"decay", 2.0}, {"permanent_share", 0.8}}},
                {"cold", {{"depth", 100.0}, {"exponent", 0.5}, {"decay", 2.0}, {"permanent_share", 0.2}}},
                {"cycle_size", 1.0},
                {"rounds", 20},
                {"relax_time", 1.0}};
  throw ConfigError("key 'experiment' must be one of kelly, lottery, sde, arena, hedge, impact (got '" +
                    std::string(experiment) + "')");
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  static const std::vector<std::string> allowed = {"experiment", "seed",    "threads", "output_dir",
                                                   "formats",    "params", "description"};
  for (const auto& [k, v] : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) throw ConfigError("unknown key '" + k + "'");
  }
  for (const char* key : {"experiment", "seed"})
    if (!doc.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");

  ExperimentConfig c;
  if (!doc["experiment"].is_string()) throw ConfigError("key 'experiment' must be a string");
  c.experiment = doc["experiment"].get<std::string>();
  if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0))
    throw ConfigError("key 'seed' must be a non-negative integer");
  c.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("threads")) {
    require(doc["threads"].is_number_integer() && doc["threads"].get<std::int64_t>() >= 1, "threads",
            "must be a positive integer");
    c.threads = doc["threads"].get<unsigned>();
  }
  if (doc.contains("output_dir")) {
    require(doc["output_dir"].is_string(), "output_dir", "must be a string");
    c.output_dir = doc["output_dir"].get<std::string>();
  } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
    c.output_dir = env;
  } else {
    c.output_dir = "myopia-out";
  }
  c.formats = {"csv", "json"};
  if (doc.contains("formats")) {
    require(doc["formats"].is_array(), "formats", "must be an array");
    c.formats.clear();
    for (const json& f : doc["formats"]) {
      require(f.is_string() && (f == "csv" || f == "json" || f == "svg"), "formats", "entries must be csv, json or svg");
      if (!c.wants(f.get<std::string>())) c.formats.push_back(f.get<std::string>());
    }
  }
  const json user = doc.contains("params") ? doc["params"] : json::object();
  if (!user.is_object()) throw ConfigError("key 'params' must be an object");
  c.params = default_params(c.experiment, user);
  strict_merge(c.params, user, "params");
  return c;
}

std::vector<std::string> preset_names() {
  return {"local-vs-global", "lottery-pump", "dynamic-vs-static-kelly", "trend-reversion", "gamma-accrual",
          "noncommutative-impact"};
}

json preset(std::string_view name) {
  if (name == "local-vs-global" || name == "myopic-vs-global")
    return json{{"description", "single-game Kelly bettor vs diversified bettors on 10 simultaneous games"},
                {"experiment", "arena"},
                {"seed", 20240601},
                {"params",
                 {{"market", {{"type", "discrete"}, {"p", 0.6}, {"n_games", 10}, {"rounds", 10000}}},
                  {"policies", {"single_game_kelly", "multi_game_kelly:numeric", "multi_game_kelly:paper"}},
                  {"seeds", 100}}}};
  if (name == "lottery-pump")
    return json{{"description", "contrarian vs popular numbers in a shared-jackpot lottery"},
                {"experiment", "lottery"},
                {"seed", 20240602},
                {"params", json::object()}};
  if (name == "dynamic-vs-static-kelly")
    return json{{"description", "Kelly on the current market price of risk vs its long-run mean"},
                {"experiment", "arena"},
                {"seed", 20240603},
                {"params",
                 {{"market",
                   {{"type", "stochastic_drift"}, {"kappa", 1.0}, {"lambda_hat", 0.3}, {"sigma_hat", 0.4},
                    {"sigma", 0.2}, {"r", 0.0}, {"lambda0", 0.3}, {"t_end", 20.0}, {"n_steps", 2000}}},
                  {"policies", {"dynamic_kelly_ou", "static_kelly_ou", "rolling_drift:250:5", "buy_and_hold"}},
                  {"seeds", 200}}}};
  if (name == "trend-reversion")
    return json{{"description", "buy-and-hold vs drift-aware sizing on a trending OU asset"},
                {"experiment", "arena"},
                {"seed", 20240604},
                {"params",
                 {{"market",
                   {{"type", "trend_ou"}, {"mu", 10.0}, {"kappa", 1.0}, {"sigma", 10.0}, {"s0", 100.0}, {"r", 0.0},
                    {"t_end", 10.0}, {"n_steps", 2500}}},
                  {"policies", {"buy_and_hold", "trend_reversion:1"}},
                  {"seeds", 200}}}};
  if (name == "gamma-accrual")
    return json{{"description", "delta-hedged option P&L vs the dollar-gamma accrual"},
                {"experiment", "hedge"},
                {"seed", 20240605},
                {"params", json::object()}};
  if (name == "noncommutative-impact")
    return json{{"description", "order-sequence asymmetry and a two-venue cycle"},
                {"experiment", "impact"},
                {"seed", 20240606},
                {"params", json::object()}};
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

namespace {

json parse_override_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

void set_dotted(json& params, const std::string& dotted, const json& value) {
  json* node = &params;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot - start);
    if (part.empty()) throw ConfigError("malformed parameter override '" + dotted + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError("key 'params." + dotted.substr(0, dot) + "' is not an object");
    node = &child;
    start = dot + 1;
  }
}

}  // namespace

ExperimentConfig build_config(const CliRequest& req) {
  json doc = json::object();
  if (req.preset) doc = preset(*req.preset);
  if (req.config_file) {
    std::ifstream in(*req.config_file);
    if (!in) throw ConfigError("cannot read config file '" + req.config_file->string() + "'");
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded()) throw ConfigError("config file '" + req.config_file->string() + "' is not valid JSON");
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    if (!file.contains("seed")) throw ConfigError("missing required key 'seed'");
    if (req.subcommand == "run" && !file.contains("experiment") && !req.preset)
      throw ConfigError("missing required key 'experiment'");
    for (const auto& [k, v] : file.items()) {
      if (k == "params" && doc.contains("params") && doc["params"].is_object() && v.is_object()) {
        for (const auto& [pk, pv] : v.items()) doc["params"][pk] = pv;
      } else {
        doc[k] = v;
      }
    }
  }
  if (req.subcommand != "run") {
    if (doc.contains("experiment") && doc["experiment"] != req.subcommand)
      throw ConfigError("key 'experiment' is '" + doc["experiment"].dump() + "' but the subcommand is '" +
                        req.subcommand + "'");
    doc["experiment"] = req.subcommand;
  }
  if (!doc.contains("experiment")) throw ConfigError("missing required key 'experiment'");
  if (!doc.contains("seed")) doc["seed"] = 42;
  if (req.seed) doc["seed"] = *req.seed;
  if (req.threads) doc["threads"] = *req.threads;
  if (req.output_dir) doc["output_dir"] = *req.output_dir;
  if (req.svg) {
    json formats = doc.contains("formats") ? doc["formats"] : json{"csv", "json"};
    formats.push_back("svg");
    doc["formats"] = formats;
  }
  if (!doc.contains("params")) doc["params"] = json::object();
  for (const std::string& item : req.param_overrides) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("parameter override '" + item + "' must look like key=value");
    set_dotted(doc["params"], item.substr(0, eq), parse_override_value(item.substr(eq + 1)));
  }
  return parse_config(doc);
}

// ------------------------------------------------------------- experiments

namespace {

class RowSink {
 public:
  RowSink(std::string experiment, std::uint64_t seed) : experiment_(std::move(experiment)), seed_(seed) {}
  void add(std::string key, std::string metric, double value) {
    rows_.push_back({experiment_, seed_, std::move(key), std::move(metric), value});
  }
  std::vector<ResultRow> take() { return std::move(rows_); }

 private:
  std::string experiment_;
  std::uint64_t seed_;
  std::vector<ResultRow> rows_;
};

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::string xkey(const std::string& label, double x) { return label + "|x=" + num(x); }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Context {
  const ExperimentConfig& config;
  const json& params;
  Seed root;
  RowSink rows;
  json summary = json::object();
  std::ostringstream report;
};

void run_kelly(Context& cx) {
  const json& p = cx.params;
  const double prob = p["p"].get<double>();
  const int n_max = p["n_max"].get<int>();
  const double tol = p["tol"].get<double>();
  require(prob > 0.5 && prob < 1.0, "params.p", "must lie in (0.5, 1)");
  require(n_max >= 1 && n_max <= kMaxEnumeratedGames, "params.n_max",
          "must lie in [1, " + std::to_string(kMaxEnumeratedGames) + "]");
  require(tol > 0.0, "params.tol", "must be positive");

  cx.rows.add("single", "kelly_single", kelly_single(prob));
  json table = json::array();
  cx.report << fmt::format("{:>4}  {:>20}  {:>20}  {:>12}\n", "n", "closed_form", "numeric_optimum", "gap");
  for (int n = 1; n <= n_max; ++n) {
    const double paper = kelly_multi_paper(prob, n);
    const double numeric = optimize_fraction(prob, n, tol);
    const double at = std::min(paper, kFractionCeiling);
    const double g_paper = expected_log_growth(prob, n, at);
    const double g_numeric = expected_log_growth(prob, n, numeric);
    const double slope = expected_log_growth_slope(prob, n, at);
    cx.rows.add(xkey("n", n), "paper_fraction", paper);
    cx.rows.add(xkey("n", n), "numeric_fraction", numeric);
    const std::string key = "n=" + std::to_string(n);
    cx.rows.add(key, "fraction_gap", numeric - paper);
    cx.rows.add(key, "growth_at_paper", g_paper);
    cx.rows.add(key, "growth_at_numeric", g_numeric);
    cx.rows.add(key, "slope_at_paper", slope);
    table.push_back({{"n", n},
                     {"paper_fraction", paper},
                     {"numeric_fraction", numeric},
                     {"growth_at_paper", g_paper},
                     {"growth_at_numeric", g_numeric},
                     {"slope_at_paper", slope}});
    cx.report << fmt::format("{:>4}  {:>20.17f}  {:>20.17f}  {:>12.3e}\n", n, paper, numeric, numeric - paper);
  }
  cx.summary = {{"p", prob}, {"kelly_single", kelly_single(prob)}, {"table", table}};
}

void run_lottery(Context& cx) {
  const json& p = cx.params;
  LotterySpec spec;
  spec.popularity = p["popularity"].get<std::vector<double>>();
  spec.draw_distribution = p["draw_distribution"].get<std::vector<double>>();
  spec.n_other_players = p["other_players"].get<std::int64_t>();
  spec.jackpot = p["jackpot"].get<double>();
  spec.ticket_price = p["ticket_price"].get<double>();
  const auto draws = p["draws"].get<std::int64_t>();
  require(draws >= 1, "params.draws", "must be >= 1");
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("key 'params' describes an invalid lottery: ") + e.what());
  }

  const Seed base = derive_stream(cx.root, "lottery");
  json numbers = json::array();
  cx.report << fmt::format("{:>6}  {:>12}  {:>12}  {:>12}  {:>10}\n", "number", "exact_net", "mc_net", "mc_se", "z");
  for (std::size_t i = 0; i < spec.n_numbers(); ++i) {
    const double ev = expected_ticket_value(spec, i);
    const LotteryRun run = simulate_lottery(spec, i, draws, substream(base, i), cx.config.threads);
    const double exact_net = ev - spec.ticket_price;
    const double z = run.std_error > 0 ? (run.mean_net_payoff - exact_net) / run.std_error : 0.0;
    cx.rows.add(xkey("number", static_cast<double>(i)), "exact_net", exact_net);
    cx.rows.add(xkey("number", static_cast<double>(i)), "mc_net", run.mean_net_payoff);
    const std::string key = "number=" + std::to_string(i);
    cx.rows.add(key, "expected_ticket_value", ev);
    cx.rows.add(key, "mc_std_error", run.std_error);
    cx.rows.add(key, "mc_z_score", z);
    cx.rows.add(key, "wins", static_cast<double>(run.wins));
    numbers.push_back({{"number", i},
                       {"expected_ticket_value", ev},
                       {"exact_net", exact_net},
                       {"mc_net", run.mean_net_payoff},
                       {"mc_std_error", run.std_error},
                       {"wins", run.wins}});
    cx.report << fmt::format("{:>6}  {:>12.6f}  {:>12.6f}  {:>12.6f}  {:>10.3f}\n", i, exact_net, run.mean_net_payoff,
                             run.std_error, z);
  }
  const auto [best, best_ev] = best_number(spec);
  const double house = expected_house_payout(spec);
  cx.rows.add("best", "number", static_cast<double>(best));
  cx.rows.add("best", "expected_ticket_value", best_ev);
  cx.rows.add("house", "expected_payout", house);
  cx.summary = {{"numbers", numbers},
                {"best_number", best},
                {"best_expected_ticket_value", best_ev},
                {"expected_house_payout", house},
                {"draws", draws}};
  cx.report << fmt::format("best number {} with expected ticket value {:.6f}\n", best, best_ev);
}

ContinuousModel read_model(const json& m, std::string& type) {
  type = m["type"].get<std::string>();
  if (type == "stochastic_drift") {
    StochasticDriftParams s;
    s.r = m["r"].get<double>();
    s.sigma = m["sigma"].get<double>();
    s.kappa = m["kappa"].get<double>();
    s.lambda_hat = m["lambda_hat"].get<double>();
    s.sigma_hat = m["sigma_hat"].get<double>();
    s.lambda0 = m["lambda0"].get<double>();
    s.s0 = m["s0"].get<double>();
    return s;
  }
  if (type == "trend_ou") {
    TrendOUMarket t;
    t.params = {m["mu"].get<double>(), m["kappa"].get<double>(), m["sigma"].get<double>(), m["s0"].get<double>()};
    t.r = m["r"].get<double>();
    return t;
  }
  GbmMarket g;
  g.params = {m["mu"].get<double>(), m["sigma"].get<double>(), m["s0"].get<double>()};
  g.r = m["r"].get<double>();
  return g;
}

void validate_model(const ContinuousModel& model, const std::string& key) {
  try {
    std::visit([](const auto& m) {
      if constexpr (std::is_same_v<std::decay_t<decltype(m)>, StochasticDriftParams>) validate(m);
      else validate(m.params);
    }, model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + key + "' is invalid: " + e.what());
  }
}

void run_sde(Context& cx) {
  const json& p = cx.params;
  std::string type;
  const ContinuousModel model = read_model(p["model"], type);
  validate_model(model, "params.model");
  const GridSpec grid{p["t_end"].get<double>(), p["n_steps"].get<int>()};
  require(grid.t_end > 0.0, "params.t_end", "must be positive");
  require(grid.n_steps >= 1, "params.n_steps", "must be >= 1");
  const int n_paths = p["paths"].get<int>();
  require(n_paths >= 2, "params.paths", "must be >= 2");
  const std::vector<double> sample_times = p["sample_times"].get<std::vector<double>>();
  require(!sample_times.empty(), "params.sample_times", "must not be empty");
  std::vector<Eigen::Index> idx;
  for (double t : sample_times) {
    const double pos = t / grid.dt();
    const auto i = static_cast<Eigen::Index>(std::llround(pos));
    require(i >= 0 && i <= grid.n_steps && std::abs(pos - static_cast<double>(i)) < 1e-6, "params.sample_times",
            "entries must lie on the simulation grid");
    idx.push_back(i);
  }

  // Per path, per sample time: the primary state (lambda, or the price).
  const std::size_t n_samples = idx.size();
  std::vector<std::vector<double>> state(n_samples, std::vector<double>(static_cast<std::size_t>(n_paths)));
  std::vector<std::vector<double>> log_price(n_samples, std::vector<double>(static_cast<std::size_t>(n_paths)));
  const Seed base = derive_stream(cx.root, "sde");
  parallel_for(static_cast<std::size_t>(n_paths), cx.config.threads, [&](std::size_t i) {
    const Seed s = substream(base, i);
    Path primary;
    Path price;
    if (const auto* d = std::get_if<StochasticDriftParams>(&model)) {
      DriftPaths paths = simulate_stochastic_drift(*d, grid, s);
      primary = std::move(paths.lambda);
      price = std::move(paths.price);
    } else if (const auto* t = std::get_if<TrendOUMarket>(&model)) {
      price = simulate_trend_ou(t->params, grid, s);
      primary = price;
    } else {
      price = simulate_gbm(std::get<GbmMarket>(model).params, grid, s);
      primary = price;
    }
    for (std::size_t j = 0; j < n_samples; ++j) {
      state[j][i] = primary.values()(idx[j]);
      log_price[j][i] = price.values()(idx[j]) > 0.0 ? std::log(price.values()(idx[j])) : std::nan("");
    }
  });

  const std::string label = type == "stochastic_drift" ? "lambda" : "price";
  json samples = json::array();
  cx.report << fmt::format("{:>8}  {:>14}  {:>14}  {:>10}  {:>14}  {:>14}\n", "t", "sim_mean", "analytic_mean", "z",
                           "sim_var", "analytic_var");
  for (std::size_t j = 0; j < n_samples; ++j) {
    const double t = sample_times[j];
    const MeanError m = mean_and_error(state[j]);
    double var = 0.0;
    for (double x : state[j]) var += (x - m.mean) * (x - m.mean);
    var /= static_cast<double>(n_paths - 1);
    double analytic_mean = 0.0;
    double analytic_var = 0.0;
    if (const auto* d = std::get_if<StochasticDriftParams>(&model)) {
      const OuMoments mo = ou_transition_moments(d->lambda0, d->lambda_hat, d->kappa, d->sigma_hat, t);
      analytic_mean = mo.mean;
      analytic_var = mo.variance;
    } else if (const auto* tr = std::get_if<TrendOUMarket>(&model)) {
      const OuMoments mo = ou_transition_moments(tr->params.s0, 0.0, tr->params.kappa, tr->params.sigma, t);
      analytic_mean = tr->params.mu * t + mo.mean;
      analytic_var = mo.variance;
    } else {
      const GbmParams& g = std::get<GbmMarket>(model).params;
      analytic_mean = g.s0 * std::exp(g.mu * t);
      analytic_var = g.s0 * g.s0 * std::exp(2.0 * g.mu * t) * std::expm1(g.sigma * g.sigma * t);
    }
    const double z = m.std_error > 0.0 ? (m.mean - analytic_mean) / m.std_error : 0.0;
    const MeanError lp = mean_and_error(log_price[j]);
    cx.rows.add(xkey(label, t), "sim_mean", m.mean);
    cx.rows.add(xkey(label, t), "analytic_mean", analytic_mean);
    const std::string key = label + "@t=" + num(t);
    cx.rows.add(key, "mean_std_error", m.std_error);
    cx.rows.add(key, "mean_z_score", z);
    cx.rows.add(key, "sim_variance", var);
    cx.rows.add(key, "analytic_variance", analytic_var);
    cx.rows.add(key, "mean_log_price", lp.mean);
    samples.push_back({{"t", t},
                       {"sim_mean", m.mean},
                       {"mean_std_error", m.std_error},
                       {"analytic_mean", analytic_mean},
                       {"sim_variance", var},
                       {"analytic_variance", analytic_var},
                       {"mean_log_price", finite_or_null(lp.mean)}});
    cx.report << fmt::format("{:>8.3f}  {:>14.6f}  {:>14.6f}  {:>10.3f}  {:>14.6f}  {:>14.6f}\n", t, m.mean,
                             analytic_mean, z, var, analytic_var);
  }
  cx.summary = {{"model", type}, {"state", label}, {"paths", n_paths}, {"samples", samples}};
}

void run_arena(Context& cx) {
  const json& p = cx.params;
  const json& m = p["market"];
  MarketSpec market;
  std::string type = m["type"].get<std::string>();
  if (type == "discrete") {
    DiscreteMarket d;
    d.game = {m["p"].get<double>(), m["n_games"].get<int>()};
    d.rounds = m["rounds"].get<int>();
    try {
      validate(d.game);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("key 'params.market' is invalid: ") + e.what());
    }
    require(d.game.p < 1.0, "params.market.p", "must be < 1");
    require(d.rounds >= 1, "params.market.rounds", "must be >= 1");
    require(d.game.n_games <= kMaxEnumeratedGames, "params.market.n_games",
            "must be <= " + std::to_string(kMaxEnumeratedGames));
    market = d;
  } else {
    ContinuousMarket c;
    c.model = read_model(m, type);
    validate_model(c.model, "params.market");
    c.grid = {m["t_end"].get<double>(), m["n_steps"].get<int>()};
    require(c.grid.t_end > 0.0, "params.market.t_end", "must be positive");
    require(c.grid.n_steps >= 1, "params.market.n_steps", "must be >= 1");
    market = c;
  }
  std::vector<Policy> policies;
  for (const json& item : p["policies"]) {
    require(item.is_string(), "params.policies", "entries must be strings");
    try {
      policies.push_back(parse_policy(item.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("key 'params.policies' is invalid: ") + e.what());
    }
  }
  require(!policies.empty(), "params.policies", "must not be empty");
  const int seeds = p["seeds"].get<int>();
  require(seeds >= 1, "params.seeds", "must be >= 1");
  for (const Policy& pol : policies) {
    const bool fits = type == "discrete" ? is_discrete_policy(pol) : is_continuous_policy(pol);
    require(fits, "params.policies", "entry '" + policy_name(pol) + "' does not fit a " + type + " market");
  }

  const ArenaReport rep = arena(policies, market, seeds, derive_stream(cx.root, "arena"), cx.config.threads);

  json per_policy = json::array();
  cx.report << fmt::format("{:>4}  {:<28}  {:>14}  {:>12}  {:>12}  {:>6}\n", "rank", "policy", "mean_log_growth",
                           "std_error", "max_drawdown", "bust");
  for (std::size_t r = 0; r < rep.ranking.size(); ++r) {
    const std::size_t j = rep.ranking[r];
    const SummaryStats& s = rep.stats[j];
    const std::string& name = rep.names[j];
    cx.rows.add(name, "rank", static_cast<double>(r + 1));
    cx.rows.add(name, "mean_log_growth", s.mean_log_growth);
    cx.rows.add(name, "growth_std_error", s.growth_std_error);
    cx.rows.add(name, "max_drawdown", s.max_drawdown);
    cx.rows.add(name, "bankruptcies", static_cast<double>(rep.bankruptcies[j]));
    json quantiles = json::object();
    json log_quantiles = json::object();
    for (std::size_t q = 0; q < s.terminal_wealth_quantiles.size(); ++q) {
      const auto [level, value] = s.terminal_wealth_quantiles[q];
      const double log_value = s.log_terminal_wealth_quantiles[q].second;
      if (std::isfinite(value)) cx.rows.add(name, "terminal_wealth_q" + num(level), value);
      cx.rows.add(name, "log_terminal_wealth_q" + num(level), log_value);
      quantiles[num(level)] = finite_or_null(value);
      log_quantiles[num(level)] = log_value;
    }
    per_policy.push_back({{"policy", name},
                          {"rank", r + 1},
                          {"mean_log_growth", s.mean_log_growth},
                          {"growth_std_error", s.growth_std_error},
                          {"max_drawdown", s.max_drawdown},
                          {"bankruptcies", rep.bankruptcies[j]},
                          {"terminal_wealth_quantiles", quantiles},
                          {"log_terminal_wealth_quantiles", log_quantiles}});
    cx.report << fmt::format("{:>4}  {:<28}  {:>14.6f}  {:>12.6f}  {:>12.4f}  {:>6}\n", r + 1, name, s.mean_log_growth,
                             s.growth_std_error, s.max_drawdown, rep.bankruptcies[j]);
  }
  json pairs = json::array();
  for (std::size_t a = 0; a < rep.names.size(); ++a) {
    for (std::size_t b = 0; b < rep.names.size(); ++b) {
      if (a == b) continue;
      const auto ia = static_cast<Eigen::Index>(a);
      const auto ib = static_cast<Eigen::Index>(b);
      const std::string key = rep.names[a] + ">" + rep.names[b];
      cx.rows.add(key, "win_rate", rep.win_rate(ia, ib));
      cx.rows.add(key, "mean_growth_diff", rep.mean_growth_diff(ia, ib));
      cx.rows.add(key, "diff_std_error", rep.diff_std_error(ia, ib));
      cx.rows.add(key, "t_statistic", rep.t_statistic(a, b));
      pairs.push_back({{"a", rep.names[a]},
                       {"b", rep.names[b]},
                       {"win_rate", rep.win_rate(ia, ib)},
                       {"mean_growth_diff", rep.mean_growth_diff(ia, ib)},
                       {"diff_std_error", rep.diff_std_error(ia, ib)},
                       {"t_statistic", finite_or_null(rep.t_statistic(a, b))}});
    }
  }
  for (std::size_t j = 0; j < rep.names.size(); ++j)
    for (Eigen::Index k = 0; k < rep.sample_times.size(); ++k)
      cx.rows.add(xkey(rep.names[j], rep.sample_times(k)), "mean_log_wealth",
                  rep.mean_log_wealth(static_cast<Eigen::Index>(j), k));
  cx.summary = {{"market", type}, {"seeds", seeds}, {"policies", per_policy}, {"pairwise", pairs}};
}

void run_hedge(Context& cx) {
  const json& p = cx.params;
  OptionSpec spec;
  spec.strike = p["strike"].get<double>();
  spec.maturity = p["maturity"].get<double>();
  const std::string kind = p["kind"].get<std::string>();
  require(kind == "call" || kind == "put", "params.kind", "must be 'call' or 'put'");
  spec.kind = kind == "call" ? OptionKind::call : OptionKind::put;
  HedgeConfig hc;
  hc.implied_vol = p["implied_vol"].get<double>();
  hc.realized_vol = p["realized_vol"].get<double>();
  hc.rate = p["rate"].get<double>();
  const double s0 = p["s0"].get<double>();
  const double drift = p["drift"].get<double>();
  const int path_steps = p["path_steps"].get<int>();
  const std::vector<int> rehedge = p["rehedge_steps"].get<std::vector<int>>();
  const int n_paths = p["paths"].get<int>();
  require(s0 > 0.0, "params.s0", "must be positive");
  require(path_steps >= 1, "params.path_steps", "must be >= 1");
  require(n_paths >= 2, "params.paths", "must be >= 2");
  require(!rehedge.empty(), "params.rehedge_steps", "must not be empty");
  for (int h : rehedge) require(h >= 1 && path_steps % h == 0, "params.rehedge_steps", "entries must divide path_steps");
  try {
    validate(spec);
    validate(hc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("key 'params' is invalid: ") + e.what());
  }

  const std::vector<HedgeStudy> study =
      hedge_study(spec, hc, s0, drift, path_steps, rehedge, n_paths, derive_stream(cx.root, "hedge"), cx.config.threads);
  json freqs = json::array();
  cx.report << fmt::format("{:>8}  {:>12}  {:>10}  {:>12}  {:>12}  {:>12}\n", "steps", "mean_pnl", "pnl_se",
                           "mean_accrual", "mean_gap", "mean_|gap|");
  for (std::size_t j = 0; j < rehedge.size(); ++j) {
    const HedgeStudy& h = study[j];
    const double x = rehedge[j];
    cx.rows.add(xkey("steps", x), "mean_pnl", h.pnl.mean);
    cx.rows.add(xkey("steps", x), "mean_accrual", h.accrual.mean);
    cx.rows.add(xkey("steps", x), "mean_abs_gap", h.abs_gap.mean);
    const std::string key = "steps=" + std::to_string(rehedge[j]);
    cx.rows.add(key, "pnl_std_error", h.pnl.std_error);
    cx.rows.add(key, "accrual_std_error", h.accrual.std_error);
    cx.rows.add(key, "mean_gap", h.gap.mean);
    cx.rows.add(key, "gap_std_error", h.gap.std_error);
    freqs.push_back({{"rehedge_steps", rehedge[j]},
                     {"mean_pnl", h.pnl.mean},
                     {"pnl_std_error", h.pnl.std_error},
                     {"mean_accrual", h.accrual.mean},
                     {"accrual_std_error", h.accrual.std_error},
                     {"mean_gap", h.gap.mean},
                     {"gap_std_error", h.gap.std_error},
                     {"mean_abs_gap", h.abs_gap.mean}});
    cx.report << fmt::format("{:>8}  {:>12.6f}  {:>10.6f}  {:>12.6f}  {:>12.6f}  {:>12.6f}\n", rehedge[j], h.pnl.mean,
                             h.pnl.std_error, h.accrual.mean, h.gap.mean, h.abs_gap.mean);
  }
  cx.summary = {{"frequencies", freqs}};
  if (p["control"].get<bool>()) {
    HedgeConfig fair = hc;
    fair.realized_vol = hc.implied_vol;
    const std::vector<HedgeStudy> ctl = hedge_study(spec, fair, s0, drift, path_steps, {rehedge.back()}, n_paths,
                                                    derive_stream(cx.root, "hedge-control"), cx.config.threads);
    cx.rows.add("control", "mean_pnl", ctl[0].pnl.mean);
    cx.rows.add("control", "pnl_std_error", ctl[0].pnl.std_error);
    cx.summary["control"] = {{"rehedge_steps", rehedge.back()},
                             {"mean_pnl", ctl[0].pnl.mean},
                             {"pnl_std_error", ctl[0].pnl.std_error}};
    cx.report << fmt::format("control (realized = implied): mean pnl {:.6f} +- {:.6f}\n", ctl[0].pnl.mean,
                             ctl[0].pnl.std_error);
  }
}

ImpactParams read_impact(const json& j, const std::string& key) {
  ImpactParams ip{j["depth"].get<double>(), j["exponent"].get<double>(), j["decay"].get<double>(),
                  j["permanent_share"].get<double>()};
  try {
    validate(ip);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + key + "' is invalid: " + e.what());
  }
  return ip;
}

void run_impact(Context& cx) {
  const json& p = cx.params;
  const ImpactParams ip = read_impact(p, "params");
  const double size = p["size"].get<double>();
  const double separation = p["separation"].get<double>();
  require(size > 0.0, "params.size", "must be positive");
  require(separation >= 0.0, "params.separation", "must be >= 0");
  const ImpactParams hot = read_impact(p["hot"], "params.hot");
  const ImpactParams cold = read_impact(p["cold"], "params.cold");
  const double cycle_size = p["cycle_size"].get<double>();
  const int rounds = p["rounds"].get<int>();
  const double relax = p["relax_time"].get<double>();
  require(cycle_size > 0.0, "params.cycle_size", "must be positive");
  require(rounds >= 1, "params.rounds", "must be >= 1");
  require(relax >= 0.0, "params.relax_time", "must be >= 0");

  const MarketState start;
  const std::vector<Order> buy{{Side::buy, size, 0.0}};
  const std::vector<Order> sell{{Side::sell, size, 0.0}};
  const CommutatorResult probe = commutator(buy, sell, ip, start, separation);
  const ImpactParams linear{ip.depth, 1.0, 0.0, 1.0};
  const CommutatorResult control = commutator(buy, sell, linear, start, separation);
  const MarketState round_trip = run_sequence(start, {{Side::buy, size, 0.0}, {Side::sell, size, separation}}, 0.0, ip);
  const CycleReport cycle = two_venue_cycle(hot, cold, cycle_size, rounds, relax);

  cx.rows.add("probe", "price_gap", probe.price_gap);
  cx.rows.add("probe", "cash_gap", probe.cash_gap);
  cx.rows.add("linear_control", "price_gap", control.price_gap);
  cx.rows.add("linear_control", "cash_gap", control.cash_gap);
  cx.rows.add("round_trip", "net_cash", round_trip.cash);
  for (int k = 0; k < rounds; ++k) cx.rows.add(xkey("cycle", k + 1), "net_cash", cycle.net_cash[static_cast<std::size_t>(k)]);
  cx.rows.add("cycle", "mean_net_cash", cycle.mean_net_cash);
  cx.rows.add("cycle", "runs", cycle.runs ? 1.0 : 0.0);

  cx.summary = {{"probe", {{"price_gap", probe.price_gap}, {"cash_gap", probe.cash_gap}}},
                {"linear_control", {{"price_gap", control.price_gap}, {"cash_gap", control.cash_gap}}},
                {"round_trip_net_cash", round_trip.cash},
                {"cycle", {{"net_cash", cycle.net_cash}, {"mean_net_cash", cycle.mean_net_cash}, {"runs", cycle.runs}}}};
  cx.report << fmt::format("buy/sell vs sell/buy: price gap {:.6g}, cash gap {:.6g}\n", probe.price_gap, probe.cash_gap);
  cx.report << fmt::format("linear permanent control: price gap {:.3g}\n", control.price_gap);
  cx.report << fmt::format("single-venue round trip net cash {:.6g}\n", round_trip.cash);
  cx.report << fmt::format("two-venue cycle: mean net cash per round {:.6g} ({})\n", cycle.mean_net_cash,
                           cycle.runs ? "runs" : "does not run");
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& config) {
  Context cx{config, config.params, Seed{config.seed, 0}, RowSink(config.experiment, config.seed), json::object(), {}};
  if (config.experiment == "kelly") run_kelly(cx);
  else if (config.experiment == "lottery") run_lottery(cx);
  else if (config.experiment == "sde") run_sde(cx);
  else if (config.experiment == "arena") run_arena(cx);
  else if (config.experiment == "hedge") run_hedge(cx);
  else if (config.experiment == "impact") run_impact(cx);
  else throw ConfigError("key 'experiment' has unknown value '" + config.experiment + "'");
  RunOutput out;
  out.rows = cx.rows.take();
  out.summary = std::move(cx.summary);
  out.summary["report"] = cx.report.str();
  return out;
}

// ------------------------------------------------------------------ output

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json manifest(const ExperimentConfig& config, const std::string& status) {
  return json{{"tool", kToolName},   {"version", kToolVersion}, {"status", status},
              {"master_seed", config.seed}, {"config", config.to_json()}};
}

}  // namespace

std::string format_results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "experiment,seed,key,metric,value\n";
  for (const ResultRow& r : rows) {
    out += fmt::format("{},{},{},{},{:.17g}\n", csv_field(r.experiment), r.seed, csv_field(r.key), csv_field(r.metric),
                       r.value);
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 5) throw std::runtime_error("results.csv: malformed line '" + std::string(line) + "'");
    rows.push_back({f[0], std::stoull(f[1]), f[2], f[3], std::stod(f[4])});
  }
  return rows;
}

int run(const ExperimentConfig& config, std::ostream& log) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    log << "error: cannot create output directory '" << config.output_dir.string() << "': " << ec.message() << "\n";
    return kExitRuntime;
  }
  const std::filesystem::path manifest_path = config.output_dir / "manifest.json";
  try {
    write_file(manifest_path, manifest(config, "running").dump(2) + "\n");
    const RunOutput out = run_experiment(config);
    json files = json::array();
    if (config.wants("csv")) {
      write_file(config.output_dir / "results.csv", format_results_csv(out.rows));
      files.push_back("results.csv");
    }
    if (config.wants("json")) {
      write_file(config.output_dir / "summary.json", out.summary.dump(2) + "\n");
      files.push_back("summary.json");
    }
    if (config.wants("svg")) {
      // The chart is rendered from the CSV text, never from in-memory results.
      const std::vector<ResultRow> rows = parse_results_csv(format_results_csv(out.rows));
      if (auto svg = render_chart(rows, config.experiment)) {
        write_file(config.output_dir / "chart.svg", *svg);
        files.push_back("chart.svg");
      }
    }
    json done = manifest(config, "ok");
    done["files"] = files;
    write_file(manifest_path, done.dump(2) + "\n");
    log << out.summary["report"].get<std::string>();
    log << "wrote " << config.output_dir.string() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    json failed = manifest(config, "failed");
    failed["error"] = e.what();
    std::ofstream(manifest_path, std::ios::binary | std::ios::trunc) << failed.dump(2) << "\n";
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    json failed = manifest(config, "failed");
    failed["error"] = e.what();
    std::ofstream(manifest_path, std::ios::binary | std::ios::trunc) << failed.dump(2) << "\n";
    log << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace myopia::cli
