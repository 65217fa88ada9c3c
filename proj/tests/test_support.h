// tests/test_support.h

// Copyright 2026  tsmix authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Self-contained reference implementations used to check the production code.
// Everything here is written directly from the defining formulas with its own
// enumeration/selection logic; nothing calls into src/ except through the
// basic Waveform/SourceStack containers.

#ifndef TSMIX_TESTS_TEST_SUPPORT_H_
#define TSMIX_TESTS_TEST_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "tsmix/losses.h"
#include "tsmix/rng.h"
#include "tsmix/signal.h"

namespace oracle {

// ------------------------------------------------------------------ losses

// Scalar re-implementation of the loss definitions, straight from the
// formulas.
inline double loss_db(const std::vector<double>& y,
                      const std::vector<double>& yhat, tsmix::LossKind kind,
                      double snr_max_db = 30.0, double eps = 1e-12) {
  if (kind == tsmix::LossKind::thresholded_snr) {
    const double tau = std::pow(10.0, -snr_max_db / 10.0);
    double err = 0.0, ref = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
      err += (y[t] - yhat[t]) * (y[t] - yhat[t]);
      ref += y[t] * y[t];
    }
    return 10.0 * std::log10(err + tau * ref + eps) -
           10.0 * std::log10(ref + eps);
  }
  // negative SI-SNR
  double dot = 0.0, ref = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    dot += yhat[t] * y[t];
    ref += y[t] * y[t];
  }
  const double alpha = dot / (ref + eps);
  double target = 0.0, resid = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double a = alpha * y[t];
    target += a * a;
    resid += (a - yhat[t]) * (a - yhat[t]);
  }
  return -10.0 * std::log10((target + eps) / (resid + eps));
}

inline double si_snr_db(const std::vector<double>& y,
                        const std::vector<double>& yhat, double eps = 1e-12) {
  return -loss_db(y, yhat, tsmix::LossKind::si_snr_negative, 30.0, eps);
}

// ------------------------------------------------------- assignment sweeps

struct Assignment2 {
  double total_db = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> rows;  // rows[j] = row receiving source j
};

// Exhaustive sweep over all 2^M one-hot-column mixing matrices, evaluated
// against two targets. Row sums accumulate sources left to right in index
// order (the shared contract); the lexicographically smallest assignment wins
// ties because the integer counter enumerates in that order and only strict
// improvement replaces the incumbent.
inline Assignment2 brute_force_two_row(
    const std::vector<std::vector<double>>& targets,
    const std::vector<std::vector<double>>& sources, tsmix::LossKind kind,
    double snr_max_db = 30.0, double eps = 1e-12) {
  const std::size_t m = sources.size();
  const std::size_t t_len = targets[0].size();
  Assignment2 best;
  for (std::uint64_t code = 0; code < (1ULL << m); ++code) {
    std::vector<std::uint8_t> rows(m);
    for (std::size_t j = 0; j < m; ++j) {
      rows[j] = static_cast<std::uint8_t>((code >> (m - 1 - j)) & 1ULL);
    }
    std::vector<double> sum0(t_len, 0.0), sum1(t_len, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<double>& dst = rows[j] == 0 ? sum0 : sum1;
      for (std::size_t t = 0; t < t_len; ++t) dst[t] += sources[j][t];
    }
    const double total = loss_db(targets[0], sum0, kind, snr_max_db, eps) +
                         loss_db(targets[1], sum1, kind, snr_max_db, eps);
    if (total < best.total_db) {
      best.total_db = total;
      best.rows = rows;
    }
  }
  return best;
}

struct PermResult {
  double total_db = std::numeric_limits<double>::infinity();
  std::vector<int> perm;
};

// All C! permutations by recursive lexicographic generation; first strict
// minimum wins, so ties keep the lexicographically smallest permutation.
inline PermResult brute_force_permutations(
    const std::vector<std::vector<double>>& cost) {
  const std::size_t c = cost.size();
  PermResult best;
  std::vector<int> perm(c);
  std::vector<bool> used(c, false);
  std::function<void(std::size_t, double)> rec = [&](std::size_t depth,
                                                     double sum) {
    if (depth == c) {
      if (sum < best.total_db) {
        best.total_db = sum;
        best.perm = perm;
      }
      return;
    }
    for (std::size_t j = 0; j < c; ++j) {
      if (used[j]) continue;
      used[j] = true;
      perm[depth] = static_cast<int>(j);
      rec(depth + 1, sum + cost[depth][j]);
      used[j] = false;
    }
  };
  rec(0, 0.0);
  return best;
}

// O(n^3) Hungarian algorithm (potentials formulation) for square minimum-cost
// assignment; returns the optimal total cost. Independent cross-check for the
// permutation sweep.
inline double hungarian_cost(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0);  // match[col] = row, 1-based
  for (std::size_t i = 1; i <= n; ++i) {
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<bool> used(n + 1, false);
    std::vector<std::size_t> way(n + 1, 0);
    match[0] = i;
    std::size_t j0 = 0;
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = std::numeric_limits<double>::infinity();
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    total += cost[match[j] - 1][j - 1];
  }
  return total;
}

// ------------------------------------------ constrained least squares (KKT)

// Dense Gaussian elimination with partial pivoting; a is n x n, b length n.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

// Per sample t: minimize sum_m (s_m - u_m)^2 subject to sum_m s_m = x, via the
// full (M+1)x(M+1) KKT system solved numerically. Returns the M projected
// values for that sample.
inline std::vector<double> project_sample_kkt(const std::vector<double>& u,
                                              double x) {
  const std::size_t m = u.size();
  std::vector<std::vector<double>> a(m + 1, std::vector<double>(m + 1, 0.0));
  std::vector<double> b(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    a[i][i] = 2.0;
    a[i][m] = 1.0;
    a[m][i] = 1.0;
    b[i] = 2.0 * u[i];
  }
  b[m] = x;
  std::vector<double> sol = solve_linear(std::move(a), std::move(b));
  sol.resize(m);
  return sol;
}

// ------------------------------------------------------------ spectra (DFT)

// Hann-windowed power spectrum of the first n samples, naive DFT.
inline std::vector<double> power_spectrum(const std::vector<double>& x,
                                          std::size_t n) {
  n = std::min(n, x.size());
  std::vector<double> windowed(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double w =
        0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(t) /
                             static_cast<double>(n - 1));
    windowed[t] = w * x[t];
  }
  std::vector<double> power(n / 2 + 1, 0.0);
  for (std::size_t k = 0; k < power.size(); ++k) {
    double re = 0.0, im = 0.0;
    const double wk = -2.0 * M_PI * static_cast<double>(k) /
                      static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double ph = wk * static_cast<double>(t);
      re += windowed[t] * std::cos(ph);
      im += windowed[t] * std::sin(ph);
    }
    power[k] = re * re + im * im;
  }
  return power;
}

// Overlap coefficient of two normalized power spectra: sum_k min(Pa, Pb)
// after normalizing each spectrum to unit total. 0 = disjoint, 1 = identical.
inline double band_overlap_ratio(const std::vector<double>& a,
                                 const std::vector<double>& b,
                                 std::size_t dft_len = 4096) {
  std::vector<double> pa = power_spectrum(a, dft_len);
  std::vector<double> pb = power_spectrum(b, dft_len);
  double sa = 0.0, sb = 0.0;
  for (double p : pa) sa += p;
  for (double p : pb) sb += p;
  double overlap = 0.0;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    overlap += std::min(pa[k] / sa, pb[k] / sb);
  }
  return overlap;
}

// ------------------------------------------------------- finite differences

// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x0,
                           double h) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

// Relative error metric used by every gradient comparison.
inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

// ------------------------------------------------------------- random data

inline std::vector<double> random_samples(tsmix::Rng& rng, std::size_t n,
                                          double scale = 0.1) {
  std::vector<double> s(n);
  for (double& v : s) v = scale * rng.normal();
  return s;
}

inline tsmix::Waveform random_wave(tsmix::Rng& rng, std::size_t n,
                                   double scale = 0.1, int rate = 8000) {
  return tsmix::Waveform(random_samples(rng, n, scale), rate);
}

inline tsmix::SourceStack random_stack(tsmix::Rng& rng, std::size_t count,
                                       std::size_t n, double scale = 0.1) {
  std::vector<tsmix::Waveform> w;
  for (std::size_t i = 0; i < count; ++i) w.push_back(random_wave(rng, n, scale));
  return tsmix::SourceStack(std::move(w));
}

}  // namespace oracle

#endif  // TSMIX_TESTS_TEST_SUPPORT_H_
