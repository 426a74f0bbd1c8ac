#pragma once

#include "svr/estimator.hpp"
#include "svr/key_value.hpp"
#include "svr/synthesis.hpp"

#include <optional>
#include <string>

namespace svr {

// Everything needed to build a ModelSpec; filled from `curve.*`, `link.*`,
// `sigma_gamma`, `sigma_zeta`, `trunc_frac` and `line_tube_sigmas` keys.
struct ModelConfig {
  CurveSpec curve;
  Index grid = 4000;
  std::optional<double> normalize_reach;
  LinkSpec link;
  bool link_scale_is_length = true;  // exp/power scale defaults to the curve length
  double sigma_gamma = 0.5;
  double sigma_zeta = 0.0;
  double trunc_frac = 0.9;
  double line_tube_sigmas = 10.0;
};

ModelConfig read_model_config(const KeyValueConfig& kv);
DiscretizedCurve build_model_curve(const ModelConfig& cfg);
ModelSpec build_model(const ModelConfig& cfg);

// Keys: l, j, m, M, partition, distance, heavy_threshold_factor,
// strict_zero_fallback. `prefix` is prepended to each key.
FitConfig read_fit_config(const KeyValueConfig& kv, const std::string& prefix = "");

// Text matrix: first line "d,n,has_oracle" (integers), then one row per
// sample: x_1..x_d, y and, with oracle fields, t, tangent_1..tangent_d.
void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(const std::string& path);

std::string format_double(double v);

}  // namespace svr
