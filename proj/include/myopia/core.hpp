#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace myopia {

using Vector = Eigen::VectorXd;

/// Identifies one deterministic random stream. Children are derived by
/// label or by index; a stream is never advanced to produce another one.
struct Seed {
  std::uint64_t master = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const Seed&, const Seed&) = default;
};

/// Child stream named by a label, e.g. "paths" or "lambda".
Seed derive_stream(const Seed& seed, std::string_view label);

/// Child stream named by an index, e.g. the path or seed number.
Seed substream(const Seed& seed, std::uint64_t index);

/// Mersenne-Twister stream seeded through std::seed_seq, with uniform and
/// Gaussian conversions fixed here rather than left to the standard
/// library's distributions, so draws are bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(const Seed& seed);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal by the Box-Muller transform; draws come in pairs.
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Time-indexed series. Times are strictly increasing, values finite.
class Path {
 public:
  Path() = default;
  Path(Vector times, Vector values);

  const Vector& times() const { return times_; }
  const Vector& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  double front() const { return values_(0); }
  double back() const { return values_(values_.size() - 1); }
  double horizon() const { return times_(times_.size() - 1) - times_(0); }

 private:
  Vector times_;
  Vector values_;
};

/// n_steps + 1 equally spaced points on [0, t_end].
Vector uniform_times(double t_end, int n_steps);

bool same_grid(const Path& a, const Path& b);

/// Per-path quantities that summarize() aggregates.
struct PathMetrics {
  double log_growth_rate = 0.0;  // log(W_T / W_0) / T
  double max_drawdown = 0.0;
  double terminal_wealth = 0.0;  // may overflow to +inf on long discrete runs
  double log_terminal_wealth = 0.0;
  double horizon = 0.0;
};

PathMetrics path_metrics(const Path& wealth);
/// Same metrics from a path of log wealth, which stays finite where wealth
/// itself would overflow.
PathMetrics path_metrics_from_log(const Path& log_wealth);

struct SummaryStats {
  double mean_log_growth = 0.0;
  double growth_std_error = 0.0;
  double max_drawdown = 0.0;
  std::vector<std::pair<double, double>> terminal_wealth_quantiles;
  std::vector<std::pair<double, double>> log_terminal_wealth_quantiles;
  std::size_t n_paths = 0;
};

inline constexpr double kQuantileLevels[] = {0.05, 0.25, 0.5, 0.75, 0.95};

SummaryStats summarize(std::span<const Path> wealth_paths);
SummaryStats summarize(std::span<const PathMetrics> metrics);

/// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
double sorted_quantile(std::span<const double> sorted, double level);

/// Mean and standard error of a sample, accumulated in the given order.
struct MeanError {
  double mean = 0.0;
  double std_error = 0.0;
};
MeanError mean_and_error(std::span<const double> xs);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Callers write
/// results into slot i, so output never depends on scheduling.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace myopia
