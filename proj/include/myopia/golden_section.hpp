#pragma once

#include <cmath>
#include <stdexcept>

namespace myopia {

struct GoldenSectionResult {
  double lower = 0.0;  // final bracket
  double upper = 0.0;
  double argmax = 0.0;
  double value = 0.0;
  int iterations = 0;
};

/// Maximizes a unimodal function on [lower, upper] by golden-section
/// search, stopping once the bracket is narrower than `width`.
template <class F>
GoldenSectionResult golden_section_maximize(F&& f, double lower, double upper, double width, int max_iterations = 500) {
  if (!(upper > lower)) throw std::invalid_argument("golden_section_maximize: empty bracket");
  if (!(width > 0.0)) throw std::invalid_argument("golden_section_maximize: width must be positive");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lower;
  double b = upper;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  for (; it < max_iterations && (b - a) > width; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  GoldenSectionResult r;
  r.lower = a;
  r.upper = b;
  r.iterations = it;
  if (fc >= fd) {
    r.argmax = c;
    r.value = fc;
  } else {
    r.argmax = d;
    r.value = fd;
  }
  return r;
}

}  // namespace myopia
