// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's numerical code.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Monomial interpolation by dense LU in long double. Coefficients are
/// returned highest degree first.
inline std::vector<long double> vandermonde_lu(const std::vector<double>& x,
                                               const std::vector<double>& y) {
  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const auto n = static_cast<Eigen::Index>(x.size());
  Mat v(n, n);
  Vec b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    long double p = 1.0L;
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      v(i, j) = p;
      p *= static_cast<long double>(x[static_cast<std::size_t>(i)]);
    }
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Vec c = v.fullPivLu().solve(b);
  return {c.data(), c.data() + n};
}

inline long double horner(const std::vector<long double>& c, long double x) {
  long double acc = 0.0L;
  for (long double a : c) acc = acc * x + a;
  return acc;
}

inline double logistic_bler(double snr, double mid, double slope) {
  return 1.0 / (1.0 + std::exp(slope * (snr - mid)));
}

inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

/// Pearson chi-square statistic of observed counts against expected probabilities.
inline double chi_square(const std::vector<std::int64_t>& observed, const std::vector<double>& p) {
  std::int64_t n = 0;
  for (auto o : observed) n += o;
  double chi = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = p[i] * static_cast<double>(n);
    const double d = static_cast<double>(observed[i]) - e;
    chi += d * d / e;
  }
  return chi;
}

/// Occupancy count per (subchannel, phase) by direct enumeration.
inline std::map<std::pair<int, int>, int> occupancy(const std::vector<std::pair<int, int>>& slots) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& s : slots) ++count[s];
  return count;
}

/// Vehicles that share a slot with at least one other vehicle.
inline int colliding_vehicles(const std::vector<std::pair<int, int>>& slots) {
  const auto occ = occupancy(slots);
  int n = 0;
  for (const auto& s : slots) n += occ.at(s) > 1 ? 1 : 0;
  return n;
}

}  // namespace oracle
