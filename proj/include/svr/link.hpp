#pragma once

#include <string>
#include <vector>

namespace svr {

enum class LinkKind { identity, exp_scaled, power_holder, custom_table };

// Monotone link f applied to the arc-length parameter.
//   identity      f(t) = slope * t + offset   (slope 0 gives a constant link)
//   exp_scaled    f(t) = scale * exp(t / scale)
//   power_holder  f(t) = scale * (t / scale)^exponent, t >= 0
//   custom_table  piecewise-linear through (table_t[i], table_f[i])
// `s` is the nominal Holder smoothness handed to the parameter selectors.
struct LinkSpec {
  LinkKind kind = LinkKind::identity;
  double s = 1.0;
  double slope = 1.0;
  double offset = 0.0;
  double scale = 1.0;
  double exponent = 0.7;
  std::vector<double> table_t;
  std::vector<double> table_f;

  void validate() const;
  double operator()(double t) const;
  // Analytic where available, central difference for tables.
  double derivative(double t) const;
};

LinkKind parse_link_kind(const std::string& name);
std::string to_string(LinkKind kind);

}  // namespace svr
