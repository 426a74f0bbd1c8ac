#pragma once

#include "svr/common.hpp"
#include "svr/link.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>

namespace svr {

enum class CurveKind { line, circular_arc, meyer_staircase, meyer_helix };
enum class HelixDecay { bernstein, gaussian };

CurveKind parse_curve_kind(const std::string& name);
std::string to_string(CurveKind kind);
HelixDecay parse_helix_decay(const std::string& name);
std::string to_string(HelixDecay decay);

struct CurveSpec {
  CurveKind kind = CurveKind::line;
  int d = 2;
  double length = 1.0;        // line and circular_arc
  double kappa = 0.0;         // circular_arc curvature, 0 degenerates to a line
  double delta = 0.0;         // staircase bump width, 0 means 1/d
  double helix_a = 10.0;      // helix phase frequency
  double helix_amplitude = 0.3;
  HelixDecay decay = HelixDecay::bernstein;
  double scale = 1.0;         // applied to the finished curve

  void validate() const;
};

// Unit-speed curve sampled on a uniform arc-length grid t_0 = 0 < ... < t_{N-1} = len.
// Between nodes the curve is the cubic Hermite interpolant of (point, tangent),
// which is C^1 and keeps closest-point projection smooth in x.
class DiscretizedCurve {
 public:
  DiscretizedCurve(Vector t, PointMatrix points, PointMatrix tangents);

  int dim() const { return static_cast<int>(points_.cols()); }
  Index size() const { return points_.rows(); }
  double length() const { return t_(t_.size() - 1); }
  double spacing() const { return length() / static_cast<double>(size() - 1); }
  const Vector& params() const { return t_; }
  const PointMatrix& points() const { return points_; }
  const PointMatrix& tangents() const { return tangents_; }

  Vector point_at(double t) const;
  Vector tangent_at(double t) const;  // unit length
  // Point and derivative of the interpolant (derivative not normalised).
  void evaluate(double t, Eigen::Ref<Vector> point, Eigen::Ref<Vector> derivative) const;

  DiscretizedCurve scaled(double factor) const;

  // Largest |chord/spacing - 1| over consecutive nodes.
  double unit_speed_deviation() const;

 private:
  Index segment_of(double t) const;

  Vector t_;
  PointMatrix points_;
  PointMatrix tangents_;
};

// Native grid is oversampled 50x before arc-length resampling.
DiscretizedCurve build_curve(const CurveSpec& spec, Index grid_size);

// Arc-length resampling of an arbitrary parametrised map on [lo, hi].
// `eval` writes the point for a native parameter.
template <class F>
DiscretizedCurve resample_by_arc_length(F&& eval, int d, double lo, double hi, Index native_count,
                                        Index grid_size);

struct Projection {
  double t = 0.0;
  double distance = 0.0;
};

Projection closest_point_projection(const DiscretizedCurve& curve, const Eigen::Ref<const Vector>& x);

// Max norm of second differences over the arc-length grid.
double max_curvature(const DiscretizedCurve& curve);

// min(1 / max curvature, bottleneck radius over node pairs more than 10 steps apart).
Bound reach_estimate(const DiscretizedCurve& curve);

DiscretizedCurve normalize_to_reach(const DiscretizedCurve& curve, double target_reach);

struct CurveGeometryReport {
  int d = 0;
  double len = 0.0;
  Bound reach = Bound::unbounded();
  double max_curvature = 0.0;
  double stable_rank_sum = 0.0;   // sum_k lambda_k / lambda_1
  int stable_rank_count = 0;      // #{lambda_k > 0.05 lambda_1}
  double regression_complexity = 0.0;  // len / reach, 0 when reach is unbounded
};

CurveGeometryReport geometry_report(const DiscretizedCurve& curve);

// Projects onto the column span of `projector` (d x d', orthonormal columns),
// optionally rescales by sqrt(d/d'), and measures the re-discretised image.
CurveGeometryReport project_and_measure(const DiscretizedCurve& curve, const Matrix& projector,
                                        bool rescale);
DiscretizedCurve project_curve(const DiscretizedCurve& curve, const Matrix& projector, bool rescale);

Matrix pca_projector(const DiscretizedCurve& curve, int k);
Matrix random_projector(int d, int k, std::uint64_t seed);

struct AlignmentResult {
  double t = 0.0;                 // projection parameter of x
  Vector gradient;                // finite-difference gradient of f(Pi(x))
  std::optional<double> angle;    // radians between gradient and tangent; empty when flat
};

// Central differences with the given step. A gradient below 1e-10 in norm is
// reported as flat (no angle).
AlignmentResult level_set_alignment_check(const DiscretizedCurve& curve, const LinkSpec& link,
                                          const Eigen::Ref<const Vector>& x, double step);

// ---------------------------------------------------------------------------

template <class F>
DiscretizedCurve resample_by_arc_length(F&& eval, int d, double lo, double hi, Index native_count,
                                        Index grid_size) {
  if (grid_size < 2) throw Error("resample_by_arc_length: grid_size must be >= 2");
  if (native_count < grid_size) native_count = grid_size;
  Vector u = Vector::LinSpaced(native_count, lo, hi);
  Vector cum(native_count);
  Vector prev(d), cur(d);
  eval(u(0), prev);
  cum(0) = 0.0;
  for (Index i = 1; i < native_count; ++i) {
    eval(u(i), cur);
    cum(i) = cum(i - 1) + (cur - prev).norm();
    prev.swap(cur);
  }
  const double len = cum(native_count - 1);
  if (!(len > 0.0) || !std::isfinite(len)) throw Error("resample_by_arc_length: degenerate curve");

  PointMatrix pts(grid_size, d);
  Vector t = Vector::LinSpaced(grid_size, 0.0, len);
  Index k = 0;
  Vector p(d);
  for (Index i = 0; i < grid_size; ++i) {
    const double s = t(i);
    while (k + 1 < native_count - 1 && cum(k + 1) < s) ++k;
    const double seg = cum(k + 1) - cum(k);
    const double w = seg > 0.0 ? std::clamp((s - cum(k)) / seg, 0.0, 1.0) : 0.0;
    eval(u(k) + w * (u(k + 1) - u(k)), p);
    pts.row(i) = p.transpose();
  }
  // The last node maps exactly onto the native end point.
  eval(hi, p);
  pts.row(grid_size - 1) = p.transpose();

  const double h = len / static_cast<double>(grid_size - 1);
  PointMatrix tan(grid_size, d);
  if (grid_size == 2) {
    tan.row(0) = (pts.row(1) - pts.row(0)) / h;
    tan.row(1) = tan.row(0);
  } else {
    tan.row(0) = (-3.0 * pts.row(0) + 4.0 * pts.row(1) - pts.row(2)) / (2.0 * h);
    const Index n = grid_size - 1;
    tan.row(n) = (3.0 * pts.row(n) - 4.0 * pts.row(n - 1) + pts.row(n - 2)) / (2.0 * h);
    for (Index i = 1; i < n; ++i) tan.row(i) = (pts.row(i + 1) - pts.row(i - 1)) / (2.0 * h);
  }
  return DiscretizedCurve(std::move(t), std::move(pts), std::move(tan));
}

}  // namespace svr
