#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's operators.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Every eigenvalue +-|k + delta| (2 pi / L) of the plain Dirac operator on the
// m-torus with n points per axis, k_i in [-n/2, n/2 - 1], two per mode.
inline std::vector<double> dirac_fourier_spectrum(int m, int n, double length, const std::vector<double>& shifts) {
  std::vector<double> out;
  const double unit = kTwoPi / length;
  std::vector<int> k(static_cast<std::size_t>(m), -n / 2);
  while (true) {
    double p2 = 0.0;
    for (int i = 0; i < m; ++i) {
      double p = (k[static_cast<std::size_t>(i)] + shifts[static_cast<std::size_t>(i)]) * unit;
      p2 += p * p;
    }
    out.push_back(std::sqrt(p2));
    out.push_back(-std::sqrt(p2));
    int a = m - 1;
    while (a >= 0 && k[static_cast<std::size_t>(a)] == n / 2 - 1) k[static_cast<std::size_t>(a--)] = -n / 2;
    if (a < 0) break;
    ++k[static_cast<std::size_t>(a)];
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Jacobi operator at a constant map into S^{q-1} with zero spinor and zero
// potential: map block 2 sum_i k_i^2 (the unpaired Nyquist frequency of a real
// field has zero derivative), spinor block 2 (+-|k + delta|). Multiplicities
// count real coordinates.
inline std::vector<double> jacobi_constant_map_spectrum(int m, int n, double length, const std::vector<double>& shifts,
                                                        int tangent_dim) {
  std::vector<double> out;
  const double unit = kTwoPi / length;
  std::vector<int> k(static_cast<std::size_t>(m), -n / 2);
  while (true) {
    double lap = 0.0;
    for (int i = 0; i < m; ++i) {
      int ki = k[static_cast<std::size_t>(i)];
      if (ki != -n / 2) lap += (ki * unit) * (ki * unit);
    }
    for (int t = 0; t < tangent_dim; ++t) out.push_back(2.0 * lap);
    int a = m - 1;
    while (a >= 0 && k[static_cast<std::size_t>(a)] == n / 2 - 1) k[static_cast<std::size_t>(a--)] = -n / 2;
    if (a < 0) break;
    ++k[static_cast<std::size_t>(a)];
  }
  for (double l : dirac_fourier_spectrum(m, n, length, shifts))
    for (int c = 0; c < 2 * tangent_dim; ++c) out.push_back(2.0 * l);
  std::sort(out.begin(), out.end());
  return out;
}

// (h^m sum |f|^p)^(1/p)
inline double lp_norm(const std::vector<double>& f, double cell_volume, double p) {
  double acc = 0.0;
  for (double x : f) acc += std::pow(std::abs(x), p);
  return std::pow(acc * cell_volume, 1.0 / p);
}

inline double central_difference(const std::function<double(double)>& f, double t) {
  return (f(t) - f(-t)) / (2.0 * t);
}

inline double five_point_second(const std::function<double(double)>& f, double t) {
  return (-f(2 * t) + 16 * f(t) - 30 * f(0) + 16 * f(-t) - f(-2 * t)) / (12 * t * t);
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace oracle
