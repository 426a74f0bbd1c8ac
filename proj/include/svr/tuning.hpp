#pragma once

#include "svr/common.hpp"
#include "svr/key_value.hpp"
#include "svr/synthesis.hpp"

#include <optional>
#include <string>

namespace svr {

// Multipliers for the unquantified absolute constants of the rate results.
// All default to 1.
struct AbsoluteConstants {
  double gamma_f = 1.0;   // C_{gamma,f}
  double l_max = 1.0;     // l_max
  double j = 1.0;         // j* in the fixed-j regimes and the regime-B multiplier
  double regime_a = 1.0;  // threshold of the sample-starved regime
  double regime_b = 1.0;  // threshold of the l_max-capped regime
  double wide = 1.0;      // wide-tube l*
  double n_min = 1.0;     // sample-size requirement
  double sc_c1 = 1.0;
  double sc_c2 = 1.0;

  // Reads `<prefix>gamma_f`, `<prefix>l_max`, ... when present.
  static AbsoluteConstants from_config(const KeyValueConfig& kv, const std::string& prefix = "abs.");
};

struct TheoryConstants {
  double C_f = 1.0;
  double C_f_prime = 1.0;
  double omega_f = 0.0;
  double C_Y = 1.0;
  double R_0 = 1.0;
  double sigma_gamma = 1.0;
  double sigma_zeta = 0.0;
  double len = 1.0;
  Bound reach = Bound::unbounded();
  double s = 1.0;
  double seminorm_f = 1.0;
  double sup_f = 1.0;
  double seminorm_rho = 0.0;
  int d = 1;
  AbsoluteConstants abs;

  void validate() const;
  double noise_scale() const { return std::max(sigma_zeta, omega_f); }
};

struct DerivedConstants {
  double C_gamma_f = 0.0;
  std::optional<double> M_star;  // empty without observation noise
  Bound l_max = Bound::unbounded();
};

DerivedConstants derived_constants(const TheoryConstants& tc);
double m_star(const TheoryConstants& tc);  // throws when sigma_zeta == 0

enum class Regime { sample_starved, lmax_capped, balanced, noiseless, wide };
std::string to_string(Regime r);

struct Selection {
  int l = 1;
  int j = 1;
  Regime regime = Regime::balanced;
};

Selection select_noisy(const TheoryConstants& tc, long long n);
Selection select_noiseless(const TheoryConstants& tc, long long n);
Selection select_wide(const TheoryConstants& tc);

struct AssumptionReport {
  double lcv_margin = 0.0;   // sigma_gamma - 2 C_f max(sigma_zeta, omega_f)
  bool lcv_ok = false;
  double sc_margin_tube = 0.0;   // c1 C_f max(.) - sigma_gamma
  double sc_margin_reach = 0.0;  // c2 reach - C_f max(.)
  bool sc_ok = false;
  bool omega_ok = false;
  long long n_min_noisy = 0;
  long long n_min_noiseless = 0;
};

AssumptionReport assumption_report(const TheoryConstants& tc);

// Smallest integer n >= 2 with n / ln(n)^1.5 >= rhs.
long long smallest_n_for_requirement(double rhs);

// Constants of a synthetic model from oracle knowledge: curve geometry plus
// grid estimators on the link over [0, len].
TheoryConstants theory_constants_for(const ModelSpec& model, const AbsoluteConstants& abs = {},
                                     double seminorm_rho = 0.0);

// m = 0 for s < 1, 1 for s in [1, 2), 2 for s = 2.
int default_degree(double s);

}  // namespace svr
