#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "eemix/error.hpp"

namespace eemix {

namespace detail {

// Dense least squares min ||A z - y|| via Householder QR with column
// pivoting. A is given as k columns of length m, k <= m. On numerical rank
// deficiency the minimum-norm minimizer is returned.
inline std::vector<double> least_squares(const std::vector<std::span<const double>>& cols,
                                         std::span<const double> y) {
  const std::size_t m = y.size();
  const std::size_t k = cols.size();

  std::vector<std::vector<double>> w(k);
  for (std::size_t j = 0; j < k; ++j) w[j].assign(cols[j].begin(), cols[j].end());
  std::vector<double> qty(y.begin(), y.end());
  std::vector<std::size_t> perm(k);
  for (std::size_t j = 0; j < k; ++j) perm[j] = j;

  std::vector<std::vector<double>> r_rows(k, std::vector<double>(k, 0.0));
  std::vector<double> v;
  std::size_t rank = k;

  for (std::size_t t = 0; t < k; ++t) {
    // Pivot on the largest remaining column norm.
    std::size_t best = t;
    double best_norm2 = -1.0;
    for (std::size_t c = t; c < k; ++c) {
      double s = 0.0;
      for (std::size_t i = t; i < m; ++i) s += w[c][i] * w[c][i];
      if (s > best_norm2) {
        best_norm2 = s;
        best = c;
      }
    }
    if (best != t) {
      std::swap(w[best], w[t]);
      std::swap(perm[best], perm[t]);
      for (std::size_t tt = 0; tt < t; ++tt) std::swap(r_rows[tt][best], r_rows[tt][t]);
    }

    const double norm = std::sqrt(best_norm2);
    if (!(norm > 0.0)) {
      rank = t;
      break;
    }

    const double x0 = w[t][t];
    const double alpha = x0 > 0.0 ? -norm : norm;
    v.assign(w[t].begin() + static_cast<std::ptrdiff_t>(t), w[t].end());
    v[0] = x0 - alpha;
    double vtv = 0.0;
    for (double e : v) vtv += e * e;
    r_rows[t][t] = alpha;

    auto reflect = [&](std::vector<double>& u) {
      double dot = 0.0;
      for (std::size_t i = t; i < m; ++i) dot += v[i - t] * u[i];
      const double coef = 2.0 * dot / vtv;
      for (std::size_t i = t; i < m; ++i) u[i] -= coef * v[i - t];
    };
    for (std::size_t j = t + 1; j < k; ++j) {
      reflect(w[j]);
      r_rows[t][j] = w[j][t];
    }
    reflect(qty);
  }

  // Numerical rank cut below the leading diagonal entry.
  if (rank > 0) {
    const double r00 = std::fabs(r_rows[0][0]);
    const double cut = r00 * 1e-13;
    std::size_t t = 0;
    while (t < rank && std::fabs(r_rows[t][t]) > cut) ++t;
    rank = t;
  }

  std::vector<double> zp(k, 0.0);
  if (rank == k) {
    for (std::size_t ii = k; ii-- > 0;) {
      double s = qty[ii];
      for (std::size_t j = ii + 1; j < k; ++j) s -= r_rows[ii][j] * zp[j];
      zp[ii] = s / r_rows[ii][ii];
    }
  } else if (rank > 0) {
    // Min-norm solution of the underdetermined top block M = R[0:rank, 0:k]:
    // z = M^T (M M^T)^{-1} c, solved with a Cholesky factor of M M^T.
    const std::size_t r = rank;
    std::vector<std::vector<double>> g(r, std::vector<double>(r, 0.0));
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = a; b < r; ++b) {
        double s = 0.0;
        for (std::size_t j = std::max(a, b); j < k; ++j) s += r_rows[a][j] * r_rows[b][j];
        g[a][b] = g[b][a] = s;
      }
    std::vector<std::vector<double>> chol(r, std::vector<double>(r, 0.0));
    for (std::size_t a = 0; a < r; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        double s = g[a][b];
        for (std::size_t c = 0; c < b; ++c) s -= chol[a][c] * chol[b][c];
        if (a == b) {
          if (!(s > 0.0)) throw ComputeError("least squares: degenerate gram block");
          chol[a][a] = std::sqrt(s);
        } else {
          chol[a][b] = s / chol[b][b];
        }
      }
    }
    std::vector<double> u(r);
    for (std::size_t a = 0; a < r; ++a) {
      double s = qty[a];
      for (std::size_t c = 0; c < a; ++c) s -= chol[a][c] * u[c];
      u[a] = s / chol[a][a];
    }
    for (std::size_t a = r; a-- > 0;) {
      double s = u[a];
      for (std::size_t c = a + 1; c < r; ++c) s -= chol[c][a] * u[c];
      u[a] = s / chol[a][a];
    }
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < r && a <= j; ++a) s += r_rows[a][j] * u[a];
      zp[j] = s;
    }
  }

  std::vector<double> z(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) z[perm[j]] = zp[j];
  return z;
}

}  // namespace detail

struct NnlsOptions {
  double tol = 1e-10;  // KKT gradient tolerance
  int max_iter = 0;    // 0 means 10 * column count
};

struct NnlsSolution {
  std::vector<double> coefficients;  // >= 0 elementwise
  double residual_norm = 0.0;
  std::vector<double> gradient;  // X^T (y - X b) at the returned iterate
  int iterations = 0;
  bool converged = false;
};

// Non-negative least squares min ||y - X b||^2 s.t. b >= 0, by the
// Lawson-Hanson active-set method. The unconstrained subproblem on the
// passive set is re-solved by QR at every change; the entering variable is
// the largest positive gradient entry, ties broken by lowest column index,
// so the result is deterministic for given inputs.
inline NnlsSolution nnls_solve(std::span<const std::vector<double>> columns,
                               std::span<const double> y, const NnlsOptions& options = {}) {
  const std::size_t s = columns.size();
  const std::size_t p = y.size();
  if (s < 1) throw ValidationError("nnls: no columns");
  if (p < s) throw ValidationError("nnls: fewer rows than columns");
  for (const auto& col : columns) {
    if (col.size() != p) throw ValidationError("nnls: column length mismatch");
    double norm2 = 0.0;
    for (double e : col) {
      if (!std::isfinite(e)) throw ValidationError("nnls: non-finite matrix entry");
      norm2 += e * e;
    }
    if (norm2 == 0.0) throw ValidationError("nnls: all-zero column");
  }
  for (double e : y)
    if (!std::isfinite(e)) throw ValidationError("nnls: non-finite target entry");

  const int max_iter = options.max_iter > 0 ? options.max_iter : 10 * static_cast<int>(s);

  std::vector<double> x(s, 0.0);
  std::vector<std::size_t> passive;
  std::vector<double> residual(p), gradient(s);

  auto refresh_gradient = [&] {
    for (std::size_t i = 0; i < p; ++i) {
      double fit = 0.0;
      for (std::size_t a = 0; a < passive.size(); ++a)
        fit += columns[passive[a]][i] * x[passive[a]];
      residual[i] = y[i] - fit;
    }
    for (std::size_t j = 0; j < s; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < p; ++i) acc += columns[j][i] * residual[i];
      gradient[j] = acc;
    }
  };

  auto solve_passive = [&](const std::vector<std::size_t>& set) {
    std::vector<std::span<const double>> cols;
    cols.reserve(set.size());
    for (std::size_t j : set) cols.emplace_back(columns[j]);
    return detail::least_squares(cols, y);
  };

  refresh_gradient();
  int iterations = 0;
  bool converged = false;

  while (true) {
    std::vector<bool> blocked(s, false);
    std::size_t enter = s;
    std::vector<double> trial;

    // Candidate scan with the rejection guard: a candidate whose trial
    // coefficient is not positive is blocked for this round.
    while (true) {
      enter = s;
      double best = options.tol;
      for (std::size_t j = 0; j < s; ++j) {
        if (blocked[j]) continue;
        if (std::find(passive.begin(), passive.end(), j) != passive.end()) continue;
        if (gradient[j] > best) {
          best = gradient[j];
          enter = j;
        }
      }
      if (enter == s) break;

      std::vector<std::size_t> candidate_set = passive;
      candidate_set.push_back(enter);
      trial = solve_passive(candidate_set);
      ++iterations;
      if (trial.back() > 0.0) break;
      blocked[enter] = true;
      if (iterations >= max_iter) break;
    }

    if (enter == s) {
      converged = true;
      break;
    }
    if (iterations > max_iter) break;

    passive.push_back(enter);

    // Feasibility loop: step toward the unconstrained solution, dropping
    // coefficients that hit zero.
    while (true) {
      bool all_positive = true;
      for (double zi : trial)
        if (!(zi > 0.0)) all_positive = false;
      if (all_positive) {
        for (std::size_t a = 0; a < passive.size(); ++a) x[passive[a]] = trial[a];
        break;
      }

      double alpha = 1.0;
      std::size_t block_pos = passive.size();
      for (std::size_t a = 0; a < passive.size(); ++a) {
        if (trial[a] > 0.0) continue;
        const double xa = x[passive[a]];
        const double step = xa / (xa - trial[a]);
        if (step < alpha) {
          alpha = step;
          block_pos = a;
        }
      }
      for (std::size_t a = 0; a < passive.size(); ++a) {
        const std::size_t j = passive[a];
        x[j] += alpha * (trial[a] - x[j]);
      }
      if (block_pos < passive.size()) x[passive[block_pos]] = 0.0;

      std::vector<std::size_t> kept;
      for (std::size_t j : passive) {
        if (x[j] > 0.0)
          kept.push_back(j);
        else
          x[j] = 0.0;
      }
      passive = std::move(kept);
      if (passive.empty()) {
        trial.clear();
        break;
      }
      trial = solve_passive(passive);
      ++iterations;
      if (iterations > max_iter) break;
    }

    refresh_gradient();
    if (iterations > max_iter) break;
  }

  refresh_gradient();
  double rn = 0.0;
  for (double e : residual) rn += e * e;

  NnlsSolution out;
  out.coefficients = std::move(x);
  out.residual_norm = std::sqrt(rn);
  out.gradient = gradient;
  out.iterations = iterations;
  out.converged = converged;
  return out;
}

}  // namespace eemix
