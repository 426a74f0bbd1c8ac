#pragma once

#include "svr/estimator.hpp"
#include "svr/io.hpp"
#include "svr/tuning.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace svr {

enum class ParamStrategy { theory_noisy, theory_noiseless, theory_wide, fixed };
ParamStrategy parse_param_strategy(const std::string& name);
std::string to_string(ParamStrategy s);

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  ModelConfig model;
  std::vector<long long> n_grid{1000, 3000, 10000, 30000, 100000, 200000};
  int reps = 5;
  double train_frac = 0.9;
  ParamStrategy strategy = ParamStrategy::theory_noisy;
  FitConfig fit;                 // l, j used by the fixed strategy; other fields always apply
  std::optional<int> degree;     // m override; otherwise derived from link.s
  AbsoluteConstants abs;
  double seminorm_rho = 0.0;
  long long oracle_n = 200000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool record_timings = true;

  void validate() const;
};

// Reads every experiment key from `kv` and rejects unknown keys.
ExperimentConfig read_experiment_config(const KeyValueConfig& kv);
ExperimentConfig load_experiment_config(const std::string& path);

struct MetricsRow {
  std::string experiment_id;
  std::string curve_kind;
  int d = 0;
  long long n = 0;
  int rep = 0;
  double sigma_zeta = 0.0;
  double sigma_gamma = 0.0;
  int l = 0, j = 0, m = 0;
  double mse = 0.0;
  double rel_mse = 0.0;
  double center_err = 0.0;
  double vec_err = 0.0;
  double h_mean = 0.0;
  double misclass2 = 0.0;
  double fit_ms = 0.0;
  double pred_ms = 0.0;
  bool failed = false;

  double field(const std::string& name) const;
};

inline constexpr const char* kMetricsHeader =
    "experiment_id,curve_kind,d,n,rep,sigma_zeta,sigma_gamma,l,j,m,mse,rel_mse,center_err,vec_err,h_mean,"
    "misclass2,fit_ms,pred_ms,failed";

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// Oracle center and normalised mean tangent per slice; absent for slices the
// oracle sample never hits. Centers average gamma(t_i): the tube displacement
// has conditional mean zero given t, so dropping it only removes Monte-Carlo noise.
struct OracleSliceParams {
  std::vector<std::optional<Vector>> mean;
  std::vector<std::optional<Vector>> tangent;
};

OracleSliceParams compute_oracle_params(const DiscretizedCurve& curve, const ParameterSample& oracle,
                                        const RangePartition& partition);
OracleSliceParams compute_oracle_params(const ModelSpec& model, const RangePartition& partition,
                                        long long oracle_n, std::uint64_t seed);

struct TrainTestSplit {
  std::vector<Index> train;
  std::vector<Index> test;
};
TrainTestSplit split_indices(Index n, double train_frac, std::uint64_t seed);

double mean_squared_error(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);
// mse / population variance of `truth`; NaN when truth is constant.
double relative_mse(const Eigen::Ref<const Vector>& prediction, const Eigen::Ref<const Vector>& truth);

struct SliceParameterErrors {
  double center_err = std::numeric_limits<double>::quiet_NaN();
  double vec_err = std::numeric_limits<double>::quiet_NaN();
  double h_mean = std::numeric_limits<double>::quiet_NaN();
};
SliceParameterErrors slice_parameter_errors(const SvrModel& model, const OracleSliceParams& oracle);

// Everything a run shares across cells: the built model, its theory constants
// and the oracle parameter sample.
class ExperimentRunner {
 public:
  explicit ExperimentRunner(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const ModelSpec& model() const { return model_; }
  const std::optional<TheoryConstants>& theory() const { return theory_; }
  const ParameterSample& oracle_sample() const { return oracle_; }

  // (l, j, m) for a training set of the given size.
  FitConfig fit_config_for(long long n_train) const;

  MetricsRow run_cell(long long n, int rep) const;
  std::vector<MetricsRow> run() const;

  struct Saturation {
    double value = 0.0;
    int l = 0;
    int j = 0;
  };
  // Oracle centers and directions replace the estimated ones; (l, j) is searched
  // over {l*/2, l*, 2 l*} x {1, 2, 4} at the largest n and the smallest test MSE
  // (averaged over reps) is returned.
  Saturation mse_at_saturation() const;

 private:
  struct Cell {
    Dataset train;
    Dataset test;
    Vector truth;
  };
  Cell make_cell(long long n, int rep) const;

  ExperimentConfig config_;
  ModelSpec model_;
  std::optional<TheoryConstants> theory_;
  ParameterSample oracle_;
};

std::vector<MetricsRow> run_experiment(const ExperimentConfig& config);

// Least-squares slope of log(mean y per n) against log n over rows with
// n in [n_lo, n_hi]; failed rows are ignored.
double fit_rate(const std::vector<MetricsRow>& rows, const std::string& x_field, const std::string& y_field,
                double n_lo, double n_hi);

}  // namespace svr
