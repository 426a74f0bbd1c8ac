#pragma once

#include "svr/common.hpp"
#include "svr/curve.hpp"
#include "svr/link.hpp"

#include <cstdint>
#include <optional>

namespace svr {

// Generative model: t ~ U[0, len], X = gamma(t) + M_{gamma'(t)} (Z, 0),
// Z ~ N(0, sigma_gamma^2 I_{d-1}) truncated to ||Z|| < tube radius,
// Y = f(t) + zeta with zeta ~ N(0, sigma_zeta^2).
class ModelSpec {
 public:
  // Estimates the curve reach once; the tube radius is trunc_frac * reach for
  // curves with finite reach and `line_tube_sigmas * sigma_gamma` otherwise.
  ModelSpec(DiscretizedCurve curve, LinkSpec link, double sigma_gamma, double sigma_zeta,
            double trunc_frac = 0.9, double line_tube_sigmas = 10.0);

  const DiscretizedCurve& curve() const { return curve_; }
  const LinkSpec& link() const { return link_; }
  double sigma_gamma() const { return sigma_gamma_; }
  double sigma_zeta() const { return sigma_zeta_; }
  double trunc_frac() const { return trunc_frac_; }
  const Bound& reach() const { return reach_; }
  double tube_radius() const { return tube_radius_; }
  int dim() const { return curve_.dim(); }

 private:
  DiscretizedCurve curve_;
  LinkSpec link_;
  double sigma_gamma_;
  double sigma_zeta_;
  double trunc_frac_;
  Bound reach_ = Bound::unbounded();
  double tube_radius_ = 0.0;
};

struct Dataset {
  PointMatrix X;                       // n x d
  Vector Y;                            // n
  std::optional<Vector> oracle_t;      // true arc-length parameter
  std::optional<PointMatrix> oracle_tangent;  // gamma'(t_i)
  std::uint64_t seed = 0;

  Index size() const { return X.rows(); }
  int dim() const { return static_cast<int>(X.cols()); }
  Dataset subset(const std::vector<Index>& rows) const;
};

// Orthogonal M_v with M_v e_d = v (Householder reflection; identity for v = e_d).
Matrix rotation_to(const Eigen::Ref<const Vector>& v);

// Applies M_v to (z, 0) without forming the matrix.
void apply_rotation(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& z,
                    Eigen::Ref<Vector> out);

// Deterministic in (model, n, seed). Samples are produced in fixed-size chunks
// with independently derived streams, so the result does not depend on how
// chunks are scheduled.
Dataset sample_dataset(const ModelSpec& model, Index n, std::uint64_t seed);

// Draws only (t, Y) pairs; enough for oracle conditional means of the curve.
struct ParameterSample {
  Vector t;
  Vector Y;
};
ParameterSample sample_parameters(const ModelSpec& model, Index n, std::uint64_t seed);

double evaluate_F(const ModelSpec& model, const Eigen::Ref<const Vector>& x);

struct MonotonicityConstants {
  double C_f = 0.0;        // max preimage ratio |[min f^-1 T, max f^-1 T]| / |T|
  double C_f_prime = 0.0;  // min ratio
  double omega_f = 0.0;    // coarse-monotonicity scale, 0 if every tested scale passes
};

// Sweeps interval sizes geometrically from min_scale up to the full output
// range. A scale passes when every interval at that scale has positive
// preimage ratio at most `ratio_cap` times the full-range ratio.
MonotonicityConstants estimate_monotonicity_constants(const LinkSpec& link, double t_lo, double t_hi,
                                                      Index grid, double min_scale,
                                                      double ratio_cap = 10.0);

// sup |f(a) - f(b)| / |a - b|^s for s <= 1; for s in (1, 2] the same applied to
// the finite-difference derivative with exponent s - 1.
double estimate_holder_seminorm(const LinkSpec& link, double t_lo, double t_hi, double s, Index grid);

}  // namespace svr
