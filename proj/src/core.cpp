#include "myopia/core.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace myopia {

namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Seed derive_stream(const Seed& seed, std::string_view label) {
  const std::uint64_t h = fnv1a(label);
  return Seed{mix64(seed.master ^ mix64(h)),
              mix64(seed.stream_id ^ mix64(h ^ 0x6a09e667f3bcc909ULL) ^ seed.master)};
}

Seed substream(const Seed& seed, std::uint64_t index) {
  return Seed{seed.master, mix64(seed.stream_id ^ mix64(index ^ 0xbb67ae8584caa73bULL))};
}

Rng::Rng(const Seed& seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.master), static_cast<std::uint32_t>(seed.master >> 32),
                    static_cast<std::uint32_t>(seed.stream_id),
                    static_cast<std::uint32_t>(seed.stream_id >> 32)};
  engine_.seed(seq);
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

Path::Path(Vector times, Vector values) : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) throw std::invalid_argument("Path: times and values differ in length");
  if (times_.size() == 0) throw std::invalid_argument("Path: empty");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_(i)) || !std::isfinite(times_(i)))
      throw std::invalid_argument("Path: non-finite entry at index " + std::to_string(i));
    if (i > 0 && !(times_(i) > times_(i - 1)))
      throw std::invalid_argument("Path: times not strictly increasing at index " + std::to_string(i));
  }
}

Vector uniform_times(double t_end, int n_steps) {
  if (!(t_end > 0.0) || n_steps < 1) throw std::invalid_argument("uniform_times: need t_end > 0 and n_steps >= 1");
  Vector t(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) t(i) = t_end * static_cast<double>(i) / static_cast<double>(n_steps);
  return t;
}

bool same_grid(const Path& a, const Path& b) {
  return a.times().size() == b.times().size() && a.times() == b.times();
}

PathMetrics path_metrics(const Path& wealth) {
  const Vector& w = wealth.values();
  if ((w.array() <= 0.0).any()) throw std::invalid_argument("summarize: non-positive wealth");
  if (wealth.size() < 2) throw std::invalid_argument("summarize: wealth path needs at least two points");
  PathMetrics m;
  m.horizon = wealth.horizon();
  m.log_growth_rate = std::log(wealth.back() / wealth.front()) / m.horizon;
  m.terminal_wealth = wealth.back();
  m.log_terminal_wealth = std::log(wealth.back());
  double peak = w(0);
  for (Eigen::Index i = 1; i < w.size(); ++i) {
    peak = std::max(peak, w(i));
    m.max_drawdown = std::max(m.max_drawdown, 1.0 - w(i) / peak);
  }
  return m;
}

PathMetrics path_metrics_from_log(const Path& log_wealth) {
  if (log_wealth.size() < 2) throw std::invalid_argument("summarize: wealth path needs at least two points");
  const Vector& l = log_wealth.values();
  PathMetrics m;
  m.horizon = log_wealth.horizon();
  m.log_growth_rate = (log_wealth.back() - log_wealth.front()) / m.horizon;
  m.terminal_wealth = std::exp(log_wealth.back());
  m.log_terminal_wealth = log_wealth.back();
  double peak = l(0);
  for (Eigen::Index i = 1; i < l.size(); ++i) {
    peak = std::max(peak, l(i));
    m.max_drawdown = std::max(m.max_drawdown, -std::expm1(l(i) - peak));
  }
  return m;
}

double sorted_quantile(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw std::invalid_argument("sorted_quantile: empty sample");
  const double h = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MeanError mean_and_error(std::span<const double> xs) {
  MeanError out;
  if (xs.empty()) return out;
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

SummaryStats summarize(std::span<const PathMetrics> metrics) {
  if (metrics.empty()) throw std::invalid_argument("summarize: empty input");
  const double horizon = metrics.front().horizon;
  std::vector<double> growth;
  std::vector<double> terminal;
  std::vector<double> log_terminal;
  growth.reserve(metrics.size());
  terminal.reserve(metrics.size());
  log_terminal.reserve(metrics.size());
  SummaryStats s;
  for (const PathMetrics& m : metrics) {
    if (m.horizon != horizon) throw std::invalid_argument("summarize: paths on mismatched time grids");
    growth.push_back(m.log_growth_rate);
    terminal.push_back(m.terminal_wealth);
    log_terminal.push_back(m.log_terminal_wealth);
    s.max_drawdown = std::max(s.max_drawdown, m.max_drawdown);
  }
  // Sorting first makes every sum independent of input order.
  std::sort(growth.begin(), growth.end());
  std::sort(terminal.begin(), terminal.end());
  std::sort(log_terminal.begin(), log_terminal.end());
  const MeanError g = mean_and_error(growth);
  s.mean_log_growth = g.mean;
  s.growth_std_error = g.std_error;
  s.n_paths = metrics.size();
  for (double level : kQuantileLevels) {
    s.terminal_wealth_quantiles.emplace_back(level, sorted_quantile(terminal, level));
    s.log_terminal_wealth_quantiles.emplace_back(level, sorted_quantile(log_terminal, level));
  }
  return s;
}

SummaryStats summarize(std::span<const Path> wealth_paths) {
  if (wealth_paths.empty()) throw std::invalid_argument("summarize: empty input");
  std::vector<PathMetrics> metrics;
  metrics.reserve(wealth_paths.size());
  for (const Path& p : wealth_paths) {
    if (!same_grid(p, wealth_paths.front())) throw std::invalid_argument("summarize: paths on mismatched time grids");
    metrics.push_back(path_metrics(p));
  }
  return summarize(metrics);
}

}  // namespace myopia
