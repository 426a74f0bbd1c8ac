#include "svr/link.hpp"

#include "svr/common.hpp"

#include <algorithm>
#include <cmath>

namespace svr {

LinkKind parse_link_kind(const std::string& name) {
  if (name == "identity") return LinkKind::identity;
  if (name == "exp_scaled" || name == "exp") return LinkKind::exp_scaled;
  if (name == "power_holder" || name == "power") return LinkKind::power_holder;
  if (name == "custom_table" || name == "table") return LinkKind::custom_table;
  throw Error("unknown link kind '" + name + "'");
}

std::string to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::identity: return "identity";
    case LinkKind::exp_scaled: return "exp_scaled";
    case LinkKind::power_holder: return "power_holder";
    case LinkKind::custom_table: return "custom_table";
  }
  return "unknown";
}

void LinkSpec::validate() const {
  if (!(s >= 0.5 && s <= 2.0)) throw Error("link: smoothness s must lie in [0.5, 2]");
  if (!std::isfinite(slope) || !std::isfinite(offset)) throw Error("link: slope/offset must be finite");
  if ((kind == LinkKind::exp_scaled || kind == LinkKind::power_holder) && !(scale > 0.0))
    throw Error("link: scale must be positive");
  if (kind == LinkKind::power_holder && !(exponent > 0.0)) throw Error("link: exponent must be positive");
  if (kind == LinkKind::custom_table) {
    if (table_t.size() < 2 || table_t.size() != table_f.size())
      throw Error("link: table needs at least two (t, f) pairs of equal length");
    for (std::size_t i = 1; i < table_t.size(); ++i)
      if (!(table_t[i] > table_t[i - 1])) throw Error("link: table abscissae must increase");
  }
}

double LinkSpec::operator()(double t) const {
  switch (kind) {
    case LinkKind::identity: return slope * t + offset;
    case LinkKind::exp_scaled: return scale * std::exp(t / scale);
    case LinkKind::power_holder: return scale * std::pow(std::max(t, 0.0) / scale, exponent);
    case LinkKind::custom_table: {
      if (t <= table_t.front()) return table_f.front();
      if (t >= table_t.back()) return table_f.back();
      const auto it = std::upper_bound(table_t.begin(), table_t.end(), t);
      const std::size_t i = static_cast<std::size_t>(it - table_t.begin()) - 1;
      const double w = (t - table_t[i]) / (table_t[i + 1] - table_t[i]);
      return table_f[i] + w * (table_f[i + 1] - table_f[i]);
    }
  }
  return 0.0;
}

double LinkSpec::derivative(double t) const {
  switch (kind) {
    case LinkKind::identity: return slope;
    case LinkKind::exp_scaled: return std::exp(t / scale);
    case LinkKind::power_holder:
      return t > 0.0 ? exponent * std::pow(t / scale, exponent - 1.0) : std::numeric_limits<double>::infinity();
    case LinkKind::custom_table: {
      const double h = 1e-6 * std::max(1.0, table_t.back() - table_t.front());
      return ((*this)(t + h) - (*this)(t - h)) / (2.0 * h);
    }
  }
  return 0.0;
}

}  // namespace svr
