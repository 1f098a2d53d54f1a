#pragma once

// Scalar solvers: golden-section minimization and bisection root finding.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace ppcs {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

// Minimizes f over [a, b]. Assumes f is unimodal on the bracket.
inline GoldenResult golden_section_minimize(const std::function<double(double)>& f,
                                            double a, double b, double x_tol = 1e-10,
                                            int max_iter = 200) {
  if (!(a < b)) throw SolverError("golden section: empty bracket");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  while (std::abs(b - a) > x_tol && it < max_iter) {
    if (fc < fd) {
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
    ++it;
  }
  double xm = 0.5 * (a + b);
  return {xm, f(xm), it};
}

// Finds x in [lo, hi] with f(x) = 0, requiring a sign change on the bracket.
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          double x_tol = 1e-14, int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) throw SolverError("bisection: no sign change on bracket");
  for (int i = 0; i < max_iter; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0 || (hi - lo) < x_tol * std::max(1.0, std::abs(mid))) return mid;
    if (flo * fm < 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace ppcs
