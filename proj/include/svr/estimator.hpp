#pragma once

#include "svr/common.hpp"
#include "svr/synthesis.hpp"

#include <optional>
#include <string>
#include <vector>

namespace svr {

enum class PartitionMode { uniform, quantile };
enum class DistanceMode { anisotropic, mahalanobis };

PartitionMode parse_partition_mode(const std::string& name);
DistanceMode parse_distance_mode(const std::string& name);
std::string to_string(PartitionMode mode);
std::string to_string(DistanceMode mode);

struct FitConfig {
  int l = 1;                         // number of output slices
  int j = 1;                         // bins per local regressor
  int m = 1;                         // polynomial degree
  Bound M = Bound::unbounded();      // output clip [-M, M]
  PartitionMode partition = PartitionMode::uniform;
  DistanceMode distance = DistanceMode::anisotropic;
  double heavy_threshold_factor = 1.0;  // heavy iff n_lh >= factor * n / l
  bool strict_zero_fallback = false;   // empty bins predict 0 instead of the pooled mean

  void validate() const;
};

// Half-open intervals [k_h, k_{h+1}); the last one also contains k_l.
// A value exactly on an inner knot belongs to the interval on its right.
struct RangePartition {
  PartitionMode mode = PartitionMode::uniform;
  std::vector<double> knots;  // l + 1 nondecreasing values
  bool degenerate = false;    // all responses equal; a single interval is used

  int count() const { return static_cast<int>(knots.size()) - 1; }
  // Clamped to [0, count - 1] for values outside the range.
  int slice_of(double y) const;
};

RangePartition partition_range(const Eigen::Ref<const Vector>& Y, int l, PartitionMode mode);

// Slice index of every response. Quantile mode assigns by rank (ties in
// index order) so each slice gets floor/ceil(n / l) points.
std::vector<int> assign_slices(const Eigen::Ref<const Vector>& Y, const RangePartition& partition);

struct SliceStats {
  int h = 0;
  Index n = 0;
  Vector mean;
  Vector eigvals;   // descending, clipped at 0
  Matrix eigvecs;   // columns match eigvals
  Vector sig_vec;   // significant direction, largest-magnitude entry positive
  double H = 0.0;   // log(lambda_mid^2 / (lambda_1 lambda_d))
  bool heavy = false;

  bool thin() const { return H >= 0.0; }
  // lambda_d / lambda_1, or 1 for an all-zero spectrum.
  double ratio() const;
};

// Eigen-decomposition summary of one slice given its member rows.
SliceStats summarize_slice(int h, const PointMatrix& members);

// Per-slice statistics in slice order; `members[h]` lists the row indices of slice h.
std::vector<SliceStats> compute_slice_stats(const PointMatrix& X, const std::vector<std::vector<Index>>& members,
                                            Index n_total, double heavy_threshold_factor);

double slice_distance(const SliceStats& slice, const Eigen::Ref<const Vector>& x, DistanceMode mode);

struct BinFit {
  bool included = false;
  Index count = 0;
  double center = 0.0;
  double half_width = 1.0;
  Vector coeffs;  // in the scaled coordinate (r - center) / half_width
};

struct LocalRegressor {
  int h = 0;
  double lo = 0.0, hi = 0.0;  // projection interval I
  std::vector<BinFit> bins;
  double fallback = 0.0;

  int bin_of(double r) const;  // -1 outside [lo, hi]
  double evaluate(double r) const;
};

// Bins projections r uniformly over [min r, max r]; a bin is included when it
// holds at least `n_slice / j` points. Degree drops to count - 1 (and further on
// rank deficiency) for thin bins.
LocalRegressor fit_local_regressor(int h, const std::vector<double>& r, const std::vector<double>& y,
                                   Index n_slice, int j, int m, double fallback);

struct SvrModel {
  FitConfig config;
  int d = 0;
  Index n_train = 0;
  RangePartition partition;
  std::vector<SliceStats> slices;
  std::vector<int> heavy;                 // slice indices, ascending
  std::vector<LocalRegressor> regressors; // aligned with `heavy`

  const LocalRegressor& regressor_for(int h) const;
};

// Oracle replacements for the per-slice center and significant direction.
struct SliceOverride {
  std::optional<Vector> mean;
  std::optional<Vector> direction;
};

SvrModel fit(const PointMatrix& X, const Eigen::Ref<const Vector>& Y, const FitConfig& config);
SvrModel fit(const Dataset& data, const FitConfig& config);

// Same as fit, but slice centers and/or directions are replaced where an
// override is present before the local regressors are trained.
SvrModel fit_with_overrides(const PointMatrix& X, const Eigen::Ref<const Vector>& Y, const FitConfig& config,
                            const std::vector<SliceOverride>& overrides);

// Re-trains the local regressors against the model's current slice centers and directions.
void refit_regressors(SvrModel& model, const PointMatrix& X, const Eigen::Ref<const Vector>& Y);

// Brute-force argmin over heavy slices; ties go to the smaller index.
int nearest_heavy_slice(const SvrModel& model, const Eigen::Ref<const Vector>& x);

double predict_point(const SvrModel& model, const Eigen::Ref<const Vector>& x);
Vector predict(const SvrModel& model, const PointMatrix& X, unsigned threads = 0);

struct PredictionBatch {
  Vector values;
  std::vector<int> slices;  // h-hat per row
};
PredictionBatch predict_detailed(const SvrModel& model, const PointMatrix& X, unsigned threads = 0);

struct ClassificationIndices {
  int assigned = 0;  // h-hat
  int truth = 0;     // interval of the true value, clamped
};
ClassificationIndices classification_indices(const SvrModel& model, const Eigen::Ref<const Vector>& x,
                                             double true_value);

}  // namespace svr
