#include "svr/tuning.hpp"

#include <algorithm>
#include <cmath>

namespace svr {

AbsoluteConstants AbsoluteConstants::from_config(const KeyValueConfig& kv, const std::string& prefix) {
  AbsoluteConstants a;
  a.gamma_f = kv.get_double(prefix + "gamma_f", a.gamma_f);
  a.l_max = kv.get_double(prefix + "l_max", a.l_max);
  a.j = kv.get_double(prefix + "j", a.j);
  a.regime_a = kv.get_double(prefix + "regime_a", a.regime_a);
  a.regime_b = kv.get_double(prefix + "regime_b", a.regime_b);
  a.wide = kv.get_double(prefix + "wide", a.wide);
  a.n_min = kv.get_double(prefix + "n_min", a.n_min);
  a.sc_c1 = kv.get_double(prefix + "sc_c1", a.sc_c1);
  a.sc_c2 = kv.get_double(prefix + "sc_c2", a.sc_c2);
  for (double v : {a.gamma_f, a.l_max, a.j, a.regime_a, a.regime_b, a.wide, a.n_min, a.sc_c1, a.sc_c2})
    if (!(v > 0.0) || !std::isfinite(v)) throw Error("absolute constants must be positive and finite");
  return a;
}

void TheoryConstants::validate() const {
  if (!(C_f_prime > 0.0) || !(C_f >= C_f_prime) || !std::isfinite(C_f)) throw Error("theory: need C_f >= C_f' > 0");
  if (!(omega_f >= 0.0) || !(sigma_zeta >= 0.0)) throw Error("theory: omega_f and sigma_zeta must be >= 0");
  for (double v : {C_Y, R_0, sigma_gamma, len})
    if (!(v > 0.0) || !std::isfinite(v)) throw Error("theory: scale quantities must be positive");
  if (!(s >= 0.5 && s <= 2.0)) throw Error("theory: s must lie in [0.5, 2]");
  if (d < 1) throw Error("theory: d must be >= 1");
  if (!(seminorm_f >= 0.0) || !(sup_f >= 0.0) || !(seminorm_rho >= 0.0)) throw Error("theory: seminorms must be >= 0");
}

double m_star(const TheoryConstants& tc) {
  if (!(tc.sigma_zeta > 0.0)) throw Error("M* needs sigma_zeta > 0; use the noiseless selector");
  const double base = (1.0 / tc.sigma_zeta) * std::pow(tc.C_f * tc.C_Y * tc.R_0, tc.s) *
                      (tc.seminorm_f + tc.sup_f * tc.seminorm_rho);
  return std::pow(base, 2.0 / (2.0 * tc.s + 1.0));
}

DerivedConstants derived_constants(const TheoryConstants& tc) {
  tc.validate();
  DerivedConstants out;
  const double d = tc.d, R = tc.R_0, sg = tc.sigma_gamma;
  const double first = tc.len * std::pow(d, 1.5) / std::pow(sg, 4);
  const double second = std::pow(R, 5) * tc.C_f * tc.C_f * std::pow(d, 4) / (std::pow(tc.C_f_prime, 3) * std::pow(sg, 8));
  out.C_gamma_f = tc.abs.gamma_f * (std::pow(R, 3) * tc.C_f * tc.C_f / tc.C_f_prime) * std::max(first, second);
  if (tc.sigma_zeta > 0.0) out.M_star = m_star(tc);
  if (tc.noise_scale() > 0.0) out.l_max = Bound(tc.abs.l_max * tc.C_Y * tc.R_0 / tc.noise_scale());
  return out;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::sample_starved: return "noisy_a";
    case Regime::lmax_capped: return "noisy_b";
    case Regime::balanced: return "noisy_c";
    case Regime::noiseless: return "noiseless";
    case Regime::wide: return "wide";
  }
  return "unknown";
}

namespace {

// Floor with a few ulps of slack so exact quotients such as 10 / 2 survive rescaling.
int to_count(double v, double cap) {
  if (!(v >= 1.0)) return 1;
  return static_cast<int>(std::max(1.0, std::floor(std::min(v * (1.0 + 1e-12), cap))));
}

double slice_cap(const TheoryConstants& tc, long long n) {
  return std::max(1.0, std::floor(static_cast<double>(n) / (2.0 * tc.d)));
}

}  // namespace

Selection select_noisy(const TheoryConstants& tc, long long n) {
  if (n < 1) throw Error("select_noisy: n must be >= 1");
  const DerivedConstants dc = derived_constants(tc);
  const double Ms = m_star(tc);
  const double nd = static_cast<double>(n);
  const double cap = slice_cap(tc, n);
  const double j_c = tc.abs.j;
  Selection sel;
  if (n < 3) {
    sel.regime = Regime::sample_starved;
    sel.l = 1;
    sel.j = to_count(j_c, 1e18);
    return sel;
  }
  const double L = std::log(nd);
  const double root = std::pow(nd, 1.0 / (2.0 * tc.s + 1.0));
  const double lhs_a = std::pow(nd, 2.0 * tc.s / (2.0 * tc.s + 1.0)) / (L * L);
  if (lhs_a <= tc.abs.regime_a * dc.C_gamma_f * Ms) {
    sel.regime = Regime::sample_starved;
    sel.l = to_count(nd / (dc.C_gamma_f * L * L), cap);
    sel.j = to_count(j_c, 1e18);
  } else if (root >= tc.abs.regime_b * tc.C_Y * tc.R_0 / (Ms * tc.noise_scale())) {
    const double lmax = dc.l_max.value();
    sel.regime = Regime::lmax_capped;
    sel.l = to_count(lmax, cap);
    sel.j = to_count(j_c * (Ms / lmax) * root, 1e18);
  } else {
    sel.regime = Regime::balanced;
    sel.l = to_count(root * Ms, cap);
    sel.j = to_count(j_c, 1e18);
  }
  return sel;
}

Selection select_noiseless(const TheoryConstants& tc, long long n) {
  if (n < 1) throw Error("select_noiseless: n must be >= 1");
  if (tc.sigma_zeta > 0.0) throw Error("select_noiseless: observation noise present; use select_noisy");
  const DerivedConstants dc = derived_constants(tc);
  Selection sel;
  sel.regime = Regime::noiseless;
  sel.j = to_count(tc.abs.j, 1e18);
  if (n < 3) return sel;
  const double nd = static_cast<double>(n);
  sel.l = to_count(nd / (dc.C_gamma_f * std::pow(std::log(nd), 1.5)), slice_cap(tc, n));
  return sel;
}

Selection select_wide(const TheoryConstants& tc) {
  tc.validate();
  if (!(tc.noise_scale() > 0.0)) throw Error("select_wide: needs sigma_zeta > 0 or omega_f > 0");
  Selection sel;
  sel.regime = Regime::wide;
  sel.l = to_count(tc.abs.wide * tc.C_Y * tc.R_0 / tc.noise_scale(), 1e18);
  sel.j = to_count(tc.abs.j, 1e18);
  return sel;
}

long long smallest_n_for_requirement(double rhs) {
  auto g = [](double n) { return n / std::pow(std::log(n), 1.5); };
  // g decreases up to e^1.5 and increases afterwards.
  for (long long n = 2; n <= 5; ++n)
    if (g(static_cast<double>(n)) >= rhs) return n;
  long long lo = 5, hi = 10;
  while (g(static_cast<double>(hi)) < rhs) {
    lo = hi;
    hi *= 2;
    if (hi > (1LL << 60)) throw Error("sample requirement exceeds the representable range");
  }
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    (g(static_cast<double>(mid)) >= rhs ? hi : lo) = mid;
  }
  return hi;
}

AssumptionReport assumption_report(const TheoryConstants& tc) {
  const DerivedConstants dc = derived_constants(tc);
  AssumptionReport r;
  const double scale = tc.C_f * tc.noise_scale();
  r.lcv_margin = tc.sigma_gamma - 2.0 * scale;
  r.lcv_ok = r.lcv_margin >= 0.0;
  r.sc_margin_tube = tc.abs.sc_c1 * scale - tc.sigma_gamma;
  r.sc_margin_reach = tc.reach.is_unbounded() ? std::numeric_limits<double>::infinity()
                                              : tc.abs.sc_c2 * tc.reach.value() - scale;
  r.sc_ok = r.sc_margin_tube > 0.0 && r.sc_margin_reach >= 0.0;
  r.omega_ok = std::isfinite(tc.C_f) && tc.C_f_prime > 0.0 && tc.C_f >= tc.C_f_prime;
  const double rhs = tc.abs.n_min * dc.C_gamma_f * tc.C_f * tc.len / (tc.C_f_prime * tc.sigma_gamma);
  r.n_min_noisy = smallest_n_for_requirement(rhs);
  r.n_min_noiseless = r.n_min_noisy;
  return r;
}

TheoryConstants theory_constants_for(const ModelSpec& model, const AbsoluteConstants& abs, double seminorm_rho) {
  const DiscretizedCurve& curve = model.curve();
  const LinkSpec& link = model.link();
  const double len = curve.length();
  TheoryConstants tc;
  tc.abs = abs;
  tc.d = curve.dim();
  tc.len = len;
  tc.reach = model.reach();
  tc.sigma_gamma = model.sigma_gamma();
  tc.sigma_zeta = model.sigma_zeta();
  tc.s = link.s;
  tc.seminorm_rho = seminorm_rho;

  constexpr Index kGrid = 20001;
  double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin, sup = 0.0;
  for (Index i = 0; i < kGrid; ++i) {
    const double v = link(len * static_cast<double>(i) / (kGrid - 1));
    fmin = std::min(fmin, v);
    fmax = std::max(fmax, v);
    sup = std::max(sup, std::abs(v));
  }
  const double range = fmax - fmin;
  if (!(range > 0.0)) throw Error("theory constants: the link is constant over the curve");
  const MonotonicityConstants mc = estimate_monotonicity_constants(link, 0.0, len, kGrid, 1e-3 * range);
  tc.C_f = mc.C_f;
  tc.C_f_prime = mc.C_f_prime;
  tc.omega_f = mc.omega_f;
  tc.sup_f = sup;
  tc.seminorm_f = estimate_holder_seminorm(link, 0.0, len, tc.s, 2001);

  const Eigen::RowVectorXd mean = curve.points().colwise().mean();
  const Matrix centered = curve.points().rowwise() - mean;
  const Matrix cov = centered.transpose() * centered / static_cast<double>(curve.size());
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  tc.R_0 = std::sqrt(es.eigenvalues().maxCoeff() + tc.sigma_gamma * tc.sigma_gamma);
  tc.C_Y = range / tc.R_0;
  tc.validate();
  return tc;
}

int default_degree(double s) {
  if (s < 1.0) return 0;
  if (s < 2.0) return 1;
  return 2;
}

}  // namespace svr
