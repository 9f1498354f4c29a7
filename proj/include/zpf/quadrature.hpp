#pragma once

#include <cmath>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace zpf {

struct QuadratureResult {
  double value = 0;
  double error = 0;
  int intervals = 0;
};

/// Globally adaptive Gauss-Kronrod (15/31) integration with an absolute error
/// target: the interval with the largest local error estimate is bisected
/// until the summed estimate drops below `abs_tol` or `max_intervals` is hit.
/// The range starts out split into `initial_pieces` equal intervals.
template <typename F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol, int max_intervals = 2000,
                                    int initial_pieces = 1) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  QuadratureResult out;
  if (!(b > a)) return out;
  auto eval = [&](double lo, double hi) {
    double err = 0;
    const double v = Rule::integrate(f, lo, hi, 0, 0, &err);
    return Piece{lo, hi, v, err};
  };
  std::priority_queue<Piece> heap;
  double total = 0;
  double total_err = 0;
  const int pieces = initial_pieces < 1 ? 1 : initial_pieces;
  for (int i = 0; i < pieces; ++i) {
    const double lo = i == 0 ? a : a + (b - a) * i / pieces;
    const double hi = i + 1 == pieces ? b : a + (b - a) * (i + 1) / pieces;
    Piece p = eval(lo, hi);
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }
  int count = pieces;
  while (total_err > abs_tol && count < max_intervals) {
    Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(Piece{worst.a, worst.b, worst.value, 0});
      total_err -= worst.error;
      continue;
    }
    Piece left = eval(worst.a, mid);
    Piece right = eval(mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum from the pieces to shed the running-update rounding.
  double sum = 0, err = 0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.intervals = count;
  return out;
}

}  // namespace zpf
