#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. These deliberately avoid the library's own code paths: least
// squares goes through normal equations and Gaussian elimination, NNLS
// through exhaustive active sets, and the step-up rule through a quadratic
// scan.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "eemix/mixtest.hpp"

namespace test_oracle {

using Columns = std::vector<std::vector<double>>;

inline double objective(const Columns& X, const std::vector<double>& y,
                        const std::vector<double>& b) {
  double obj = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double fit = 0.0;
    for (std::size_t k = 0; k < X.size(); ++k) fit += X[k][i] * b[k];
    const double d = y[i] - fit;
    obj += d * d;
  }
  return obj;
}

inline bool normal_equations(const Columns& X, const std::vector<double>& y,
                             const std::vector<std::size_t>& subset, std::vector<double>& out) {
  const std::size_t k = subset.size();
  std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t i = 0; i < y.size(); ++i) a[r][c] += X[subset[r]][i] * X[subset[c]][i];
    for (std::size_t i = 0; i < y.size(); ++i) a[r][k] += X[subset[r]][i] * y[i];
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-12) return false;
    std::swap(a[piv], a[col]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= k; ++c) a[r][c] -= f * a[col][c];
    }
  }
  out.assign(k, 0.0);
  for (std::size_t r = 0; r < k; ++r) out[r] = a[r][k] / a[r][r];
  return true;
}

// Best feasible unconstrained solution over every column subset; the optimal
// NNLS active set is among them.
inline std::pair<std::vector<double>, double> nnls_by_enumeration(const Columns& X,
                                                                  const std::vector<double>& y) {
  const std::size_t s = X.size();
  std::vector<double> best(s, 0.0);
  double best_obj = objective(X, y, best);
  for (std::size_t bits = 1; bits < (std::size_t{1} << s); ++bits) {
    std::vector<std::size_t> subset;
    for (std::size_t k = 0; k < s; ++k)
      if (bits & (std::size_t{1} << k)) subset.push_back(k);
    std::vector<double> sol;
    if (!normal_equations(X, y, subset, sol)) continue;
    bool feasible = true;
    for (double v : sol)
      if (v < -1e-12) feasible = false;
    if (!feasible) continue;
    std::vector<double> b(s, 0.0);
    for (std::size_t t = 0; t < subset.size(); ++t) b[subset[t]] = std::max(sol[t], 0.0);
    const double obj = objective(X, y, b);
    if (obj < best_obj) {
      best_obj = obj;
      best = b;
    }
  }
  return {best, best_obj};
}

// Quadratic-time step-up reference: a value is under the threshold iff some
// value at or above it sits at or under rank*alpha/m, rank counting ties.
inline eemix::BhResult naive_bh(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  double threshold = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t rank = 0;
    for (std::size_t j = 0; j < m; ++j)
      if (p[j] <= p[i]) ++rank;
    if (p[i] <= static_cast<double>(rank) * alpha / static_cast<double>(m)) {
      any = true;
      threshold = std::max(threshold, p[i]);
    }
  }
  eemix::BhResult out;
  out.threshold = any ? threshold : 0.0;
  out.rejected.assign(m, 0);
  if (any)
    for (std::size_t i = 0; i < m; ++i) out.rejected[i] = p[i] <= threshold ? 1 : 0;
  return out;
}

}  // namespace test_oracle
