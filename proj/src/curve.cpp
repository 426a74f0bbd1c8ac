#include "svr/curve.hpp"

#include "svr/rng.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <limits>

namespace svr {

CurveKind parse_curve_kind(const std::string& name) {
  if (name == "line") return CurveKind::line;
  if (name == "arc" || name == "circular_arc") return CurveKind::circular_arc;
  if (name == "meyer-staircase" || name == "meyer_staircase") return CurveKind::meyer_staircase;
  if (name == "meyer-helix" || name == "meyer_helix") return CurveKind::meyer_helix;
  throw Error("unknown curve kind '" + name + "'");
}

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::line: return "line";
    case CurveKind::circular_arc: return "arc";
    case CurveKind::meyer_staircase: return "meyer-staircase";
    case CurveKind::meyer_helix: return "meyer-helix";
  }
  return "unknown";
}

HelixDecay parse_helix_decay(const std::string& name) {
  if (name == "bernstein") return HelixDecay::bernstein;
  if (name == "gaussian") return HelixDecay::gaussian;
  throw Error("unknown helix decay '" + name + "'");
}

std::string to_string(HelixDecay decay) {
  return decay == HelixDecay::bernstein ? "bernstein" : "gaussian";
}

void CurveSpec::validate() const {
  if (d < 1) throw Error("curve: d must be >= 1");
  if ((kind == CurveKind::meyer_staircase || kind == CurveKind::meyer_helix) && d < 2)
    throw Error("curve: Meyer curves need d >= 2");
  if (kind == CurveKind::circular_arc && d < 2) throw Error("curve: arc needs d >= 2");
  if (!(length > 0.0) || !std::isfinite(length)) throw Error("curve: length must be positive");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw Error("curve: kappa must be >= 0");
  if (!(delta >= 0.0)) throw Error("curve: delta must be >= 0");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("curve: scale must be positive");
  if (!(std::abs(helix_amplitude) < 1.0)) throw Error("curve: helix amplitude must be in (-1, 1)");
}

DiscretizedCurve::DiscretizedCurve(Vector t, PointMatrix points, PointMatrix tangents)
    : t_(std::move(t)), points_(std::move(points)), tangents_(std::move(tangents)) {
  const Index n = t_.size();
  if (n < 2) throw Error("curve: need at least 2 nodes");
  if (points_.rows() != n || tangents_.rows() != n || tangents_.cols() != points_.cols())
    throw Error("curve: inconsistent node arrays");
  if (points_.cols() < 1) throw Error("curve: dimension must be >= 1");
  if (t_(0) != 0.0) throw Error("curve: parameter must start at 0");
  if (!points_.allFinite() || !tangents_.allFinite() || !t_.allFinite())
    throw Error("curve: non-finite node data");
  const double h = t_(n - 1) / static_cast<double>(n - 1);
  if (!(h > 0.0)) throw Error("curve: zero length");
  for (Index i = 1; i < n; ++i) {
    if (!(t_(i) > t_(i - 1))) throw Error("curve: parameter grid must be strictly increasing");
    if (std::abs(t_(i) - h * static_cast<double>(i)) > 1e-9 * t_(n - 1))
      throw Error("curve: parameter grid must be uniform");
  }
  for (Index i = 0; i < n; ++i) {
    const double nrm = tangents_.row(i).norm();
    if (!(nrm > 0.0)) throw Error("curve: zero tangent");
    tangents_.row(i) /= nrm;
  }
}

Index DiscretizedCurve::segment_of(double t) const {
  const double u = t / spacing();
  if (!(u > 0.0)) return 0;
  return std::min<Index>(static_cast<Index>(u), size() - 2);
}

void DiscretizedCurve::evaluate(double t, Eigen::Ref<Vector> point, Eigen::Ref<Vector> derivative) const {
  t = std::clamp(t, 0.0, length());
  const Index i = segment_of(t);
  const double h = spacing();
  const double u = (t - t_(i)) / h;
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  const double d00 = 6 * u2 - 6 * u, d10 = 3 * u2 - 4 * u + 1;
  const double d01 = -6 * u2 + 6 * u, d11 = 3 * u2 - 2 * u;
  const auto p0 = points_.row(i).transpose();
  const auto p1 = points_.row(i + 1).transpose();
  const auto m0 = tangents_.row(i).transpose();
  const auto m1 = tangents_.row(i + 1).transpose();
  point = h00 * p0 + (h10 * h) * m0 + h01 * p1 + (h11 * h) * m1;
  derivative = (d00 / h) * p0 + d10 * m0 + (d01 / h) * p1 + d11 * m1;
}

Vector DiscretizedCurve::point_at(double t) const {
  Vector p(dim()), dp(dim());
  evaluate(t, p, dp);
  return p;
}

Vector DiscretizedCurve::tangent_at(double t) const {
  Vector p(dim()), dp(dim());
  evaluate(t, p, dp);
  return dp / dp.norm();
}

DiscretizedCurve DiscretizedCurve::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw Error("curve: scale factor must be positive");
  return DiscretizedCurve(t_ * factor, points_ * factor, tangents_);
}

double DiscretizedCurve::unit_speed_deviation() const {
  const double h = spacing();
  double worst = 0.0;
  for (Index i = 1; i < size(); ++i)
    worst = std::max(worst, std::abs((points_.row(i) - points_.row(i - 1)).norm() / h - 1.0));
  return worst;
}

namespace {

constexpr double kQuarterRoot2Pi = 0.63161877774606470;  // (2 pi)^(-1/4)

void eval_native(const CurveSpec& s, double u, Eigen::Ref<Vector> out) {
  out.setZero();
  const int d = s.d;
  switch (s.kind) {
    case CurveKind::line:
      out(0) = u;
      return;
    case CurveKind::circular_arc: {
      if (s.kappa == 0.0) {
        out(0) = u;
        return;
      }
      const double r = 1.0 / s.kappa;
      out(0) = r * std::sin(u / r);
      out(1) = r * (1.0 - std::cos(u / r));
      return;
    }
    case CurveKind::meyer_staircase: {
      const double delta = s.delta > 0.0 ? s.delta : 1.0 / d;
      const double amp = kQuarterRoot2Pi / std::sqrt(delta);
      for (int k = 1; k <= d; ++k) {
        const double z = static_cast<double>(k) / d - u;
        out(k - 1) = amp * std::exp(-z * z / (4.0 * delta * delta));
      }
      return;
    }
    case CurveKind::meyer_helix: {
      for (int k = 1; k <= d; ++k) {
        const double ak = s.helix_a * k;
        const double dk = (1.0 + s.helix_amplitude * std::cos(ak)) / d;
        const double dpk = (1.0 + s.helix_amplitude * std::sin(ak)) / d;
        const double c = static_cast<double>(k) / d;
        const double z = std::abs(c - u) / dk;
        const double g = s.decay == HelixDecay::bernstein ? std::exp(-z * z / (1.0 + z)) : std::exp(-z * z);
        out(k - 1) = kQuarterRoot2Pi / std::sqrt(dk) * std::cos(ak + (u - c) / dpk) * g;
      }
      return;
    }
  }
}

}  // namespace

DiscretizedCurve build_curve(const CurveSpec& spec, Index grid_size) {
  spec.validate();
  if (grid_size < 2) throw Error("build_curve: grid_size must be >= 2");
  double lo = 0.0, hi = 1.0;
  if (spec.kind == CurveKind::line || spec.kind == CurveKind::circular_arc) hi = spec.length;
  auto eval = [&spec](double u, Eigen::Ref<Vector> out) { eval_native(spec, u, out); };
  DiscretizedCurve c = resample_by_arc_length(eval, spec.d, lo, hi, 50 * grid_size, grid_size);
  return spec.scale == 1.0 ? c : c.scaled(spec.scale);
}

Projection closest_point_projection(const DiscretizedCurve& curve, const Eigen::Ref<const Vector>& x) {
  if (x.size() != curve.dim()) throw Error("closest_point_projection: dimension mismatch");
  const PointMatrix& P = curve.points();
  const Index n = curve.size();
  Index best = 0;
  double best_d2 = (P.row(0).transpose() - x).squaredNorm();
  for (Index i = 1; i < n; ++i) {
    const double d2 = (P.row(i).transpose() - x).squaredNorm();
    if (d2 < best_d2 * (1.0 - 1e-12)) {
      best_d2 = d2;
      best = i;
    }
  }

  const double h = curve.spacing();
  const double len = curve.length();
  Vector p(curve.dim()), dp(curve.dim());
  auto dist2 = [&](double t) {
    curve.evaluate(t, p, dp);
    return (p - x).squaredNorm();
  };
  auto slope = [&](double t) {
    curve.evaluate(t, p, dp);
    return (p - x).dot(dp);
  };

  double t_best = curve.params()(best);
  double d2_best = best_d2;
  auto consider = [&](double t) {
    const double d2 = dist2(t);
    const double tie = 1e-14 * std::max(d2_best, 1e-300);
    if (d2 < d2_best - tie || (std::abs(d2 - d2_best) <= tie && t < t_best)) {
      d2_best = d2;
      t_best = t;
    }
  };

  for (Index seg : {best - 1, best}) {
    if (seg < 0 || seg > n - 2) continue;
    const double a = h * static_cast<double>(seg);
    const double b = seg == n - 2 ? len : h * static_cast<double>(seg + 1);
    const double ga = slope(a), gb = slope(b);
    consider(a);
    consider(b);
    if (ga < 0.0 && gb > 0.0) {
      boost::uintmax_t iters = 100;
      auto tol = [](double lo, double hi) { return std::abs(hi - lo) <= 1e-15 * std::max(1.0, std::abs(hi)); };
      const auto root = boost::math::tools::toms748_solve(slope, a, b, ga, gb, tol, iters);
      consider(0.5 * (root.first + root.second));
    }
  }
  return {t_best, std::sqrt(d2_best)};
}

double max_curvature(const DiscretizedCurve& curve) {
  const PointMatrix& P = curve.points();
  const Index n = curve.size();
  if (n < 3) return 0.0;
  const double h2 = curve.spacing() * curve.spacing();
  double worst = 0.0;
  for (Index i = 1; i + 1 < n; ++i)
    worst = std::max(worst, (P.row(i + 1) - 2.0 * P.row(i) + P.row(i - 1)).norm() / h2);
  return worst;
}

Bound reach_estimate(const DiscretizedCurve& curve) {
  constexpr Index kMinNodes = 100;
  constexpr Index kGuard = 10;
  constexpr Index kBlock = 256;
  const Index n = curve.size();
  if (n < kMinNodes) throw Error("reach_estimate: need at least 100 nodes");

  const double kmax = max_curvature(curve);
  // Second differences of exactly straight data still carry rounding of order eps |P| / h^2.
  const double h = curve.spacing();
  const double noise = 1e3 * std::numeric_limits<double>::epsilon() * curve.points().rowwise().norm().maxCoeff() / (h * h);
  double best = kmax <= noise ? std::numeric_limits<double>::infinity() : 1.0 / kmax;

  const PointMatrix& P = curve.points();
  const PointMatrix& T = curve.tangents();
  const Vector sq = P.rowwise().squaredNorm();
  const double coincide = 1e-24 * curve.length() * curve.length();
  Matrix G(kBlock, kBlock);

  auto pair_radius = [&](Index i, Index j, double d2) {
    const auto v = P.row(j) - P.row(i);
    double r = std::numeric_limits<double>::infinity();
    for (const Index base : {i, j}) {
      const double along = v.dot(T.row(base));
      const double perp2 = d2 - along * along;
      if (perp2 > 1e-24 * d2) r = std::min(r, d2 / (2.0 * std::sqrt(perp2)));
    }
    return r;
  };

  for (Index i0 = 0; i0 < n; i0 += kBlock) {
    const Index bi = std::min(kBlock, n - i0);
    for (Index j0 = i0; j0 < n; j0 += kBlock) {
      const Index bj = std::min(kBlock, n - j0);
      if (j0 + bj - 1 - i0 <= kGuard) continue;
      G.topLeftCorner(bi, bj).noalias() = P.middleRows(i0, bi) * P.middleRows(j0, bj).transpose();
      const double cutoff = 4.0 * best * best;
      for (Index a = 0; a < bi; ++a) {
        const Index i = i0 + a;
        for (Index b = 0; b < bj; ++b) {
          const Index j = j0 + b;
          if (j - i <= kGuard) continue;
          const double d2 = sq(i) + sq(j) - 2.0 * G(a, b);
          if (d2 >= cutoff || d2 <= coincide) continue;
          best = std::min(best, pair_radius(i, j, (P.row(j) - P.row(i)).squaredNorm()));
        }
      }
    }
  }
  return std::isfinite(best) ? Bound(best) : Bound::unbounded();
}

DiscretizedCurve normalize_to_reach(const DiscretizedCurve& curve, double target_reach) {
  if (!(target_reach > 0.0) || !std::isfinite(target_reach))
    throw Error("normalize_to_reach: target must be positive");
  const Bound r = reach_estimate(curve);
  if (r.is_unbounded()) throw Error("normalize_to_reach: reach is unbounded");
  return curve.scaled(target_reach / r.value());
}

CurveGeometryReport geometry_report(const DiscretizedCurve& curve) {
  CurveGeometryReport rep;
  rep.d = curve.dim();
  rep.len = curve.length();
  rep.reach = reach_estimate(curve);
  rep.max_curvature = max_curvature(curve);

  const Eigen::RowVectorXd mean = curve.points().colwise().mean();
  const Matrix centered = curve.points().rowwise() - mean;
  Eigen::SelfAdjointEigenSolver<Matrix> es(centered.transpose() * centered, Eigen::EigenvaluesOnly);
  Vector sv = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().reverse();
  const double top = sv(0);
  if (top > 0.0) {
    rep.stable_rank_sum = sv.sum() / top;
    rep.stable_rank_count = static_cast<int>((sv.array() > 0.05 * top).count());
  }
  rep.regression_complexity = rep.reach.is_unbounded() ? 0.0 : rep.len / rep.reach.value();
  return rep;
}

DiscretizedCurve project_curve(const DiscretizedCurve& curve, const Matrix& projector, bool rescale) {
  if (projector.rows() != curve.dim() || projector.cols() < 1)
    throw Error("project_curve: projector must be d x k");
  const Index k = projector.cols();
  if (!(projector.transpose() * projector).isApprox(Matrix::Identity(k, k), 1e-8))
    throw Error("project_curve: projector columns must be orthonormal");
  const double factor = rescale ? std::sqrt(static_cast<double>(curve.dim()) / static_cast<double>(k)) : 1.0;
  const Matrix Qt = projector.transpose() * factor;
  Vector p(curve.dim()), dp(curve.dim());
  auto eval = [&](double t, Eigen::Ref<Vector> out) {
    curve.evaluate(t, p, dp);
    out.noalias() = Qt * p;
  };
  return resample_by_arc_length(eval, static_cast<int>(k), 0.0, curve.length(), 10 * curve.size(),
                                curve.size());
}

CurveGeometryReport project_and_measure(const DiscretizedCurve& curve, const Matrix& projector, bool rescale) {
  return geometry_report(project_curve(curve, projector, rescale));
}

Matrix pca_projector(const DiscretizedCurve& curve, int k) {
  if (k < 1 || k > curve.dim()) throw Error("pca_projector: k out of range");
  const Eigen::RowVectorXd mean = curve.points().colwise().mean();
  const Matrix centered = curve.points().rowwise() - mean;
  Eigen::SelfAdjointEigenSolver<Matrix> es(centered.transpose() * centered);
  return es.eigenvectors().rightCols(k).rowwise().reverse();
}

Matrix random_projector(int d, int k, std::uint64_t seed) {
  if (k < 1 || k > d) throw Error("random_projector: k out of range");
  Rng rng(derive_seed({seed}));
  std::normal_distribution<double> normal;
  Matrix g(d, k);
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < d; ++r) g(r, c) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(d, k);
}

AlignmentResult level_set_alignment_check(const DiscretizedCurve& curve, const LinkSpec& link,
                                          const Eigen::Ref<const Vector>& x, double step) {
  if (!(step > 0.0)) throw Error("level_set_alignment_check: step must be positive");
  const int d = curve.dim();
  AlignmentResult res;
  res.t = closest_point_projection(curve, x).t;
  res.gradient.resize(d);
  Vector y = x;
  for (int k = 0; k < d; ++k) {
    y(k) = x(k) + step;
    const double fp = link(closest_point_projection(curve, y).t);
    y(k) = x(k) - step;
    const double fm = link(closest_point_projection(curve, y).t);
    y(k) = x(k);
    res.gradient(k) = (fp - fm) / (2.0 * step);
  }
  const double g = res.gradient.norm();
  if (g < 1e-10) return res;
  const Vector tan = curve.tangent_at(res.t);
  const double along = res.gradient.dot(tan);
  res.angle = std::atan2((res.gradient - along * tan).norm(), std::abs(along));
  return res;
}

}  // namespace svr
