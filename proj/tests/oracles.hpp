#pragma once

// Reference computations written independently of the library code paths:
// analytic curves, naive loops and brute-force scans.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Unit-speed circular arc of curvature kappa in the first two coordinates.
inline Vec arc_point(double kappa, double t, int d) {
  Vec p = Vec::Zero(d);
  const double r = 1.0 / kappa;
  p(0) = r * std::sin(t * kappa);
  p(1) = r * (1.0 - std::cos(t * kappa));
  return p;
}

inline Vec arc_tangent(double kappa, double t, int d) {
  Vec v = Vec::Zero(d);
  v(0) = std::cos(t * kappa);
  v(1) = std::sin(t * kappa);
  return v;
}

// Dense scan of an analytic curve followed by ternary refinement.
inline double project_dense(const std::function<Vec(double)>& curve, double len, const Vec& x,
                            int samples = 200000) {
  double best_t = 0.0, best = INFINITY;
  for (int i = 0; i <= samples; ++i) {
    const double t = len * i / samples;
    const double dist = (curve(t) - x).squaredNorm();
    if (dist < best) {
      best = dist;
      best_t = t;
    }
  }
  double lo = std::max(0.0, best_t - len / samples), hi = std::min(len, best_t + len / samples);
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    if ((curve(a) - x).squaredNorm() < (curve(b) - x).squaredNorm())
      hi = b;
    else
      lo = a;
  }
  return 0.5 * (lo + hi);
}

// Covariance with explicit loops and 1/n normalisation.
inline Mat naive_covariance(const std::vector<Vec>& pts, Vec* mean_out = nullptr) {
  const int d = static_cast<int>(pts.front().size());
  Vec mean = Vec::Zero(d);
  for (const Vec& p : pts)
    for (int k = 0; k < d; ++k) mean(k) += p(k);
  mean /= static_cast<double>(pts.size());
  Mat c = Mat::Zero(d, d);
  for (const Vec& p : pts)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) c(a, b) += (p(a) - mean(a)) * (p(b) - mean(b));
  c /= static_cast<double>(pts.size());
  if (mean_out) *mean_out = mean;
  return c;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
inline Vec jacobi_eigenvalues(Mat a) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  Vec ev = a.diagonal();
  std::sort(ev.data(), ev.data() + n, std::greater<double>());
  return ev;
}

// log(geomean(l_2..l_{d-1})^2 / (l_1 l_d)) straight from the definition.
inline double h_statistic(const Vec& desc) {
  const int d = static_cast<int>(desc.size());
  if (d < 3) return 0.0;
  double logsum = 0.0;
  for (int k = 1; k < d - 1; ++k) logsum += std::log(desc(k));
  const double mid = std::exp(logsum / (d - 2));
  return std::log(mid * mid / (desc(0) * desc(d - 1)));
}

// Smallest n >= 2 with n / ln(n)^1.5 >= rhs by walking n upwards.
inline long long n_min_scan(double rhs) {
  for (long long n = 2;; ++n)
    if (static_cast<double>(n) / std::pow(std::log(static_cast<double>(n)), 1.5) >= rhs) return n;
}

// Ordinary least-squares slope of log y on log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

// E||Z||^2 / k for Z ~ N(0, sigma^2 I_k) conditioned on ||Z|| < radius.
inline double truncated_coordinate_variance(int k, double sigma, double radius, long long draws,
                                            unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  double sum = 0.0;
  long long kept = 0;
  for (long long i = 0; i < draws; ++i) {
    double r2 = 0.0;
    for (int c = 0; c < k; ++c) {
      const double z = g(rng);
      r2 += z * z;
    }
    if (r2 < radius * radius) {
      sum += r2;
      ++kept;
    }
  }
  return sum / static_cast<double>(kept) / k;
}

}  // namespace oracle
