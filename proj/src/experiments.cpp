#include "svr/experiments.hpp"

#include "svr/parallel.hpp"
#include "svr/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace svr {

namespace {

constexpr std::uint64_t kOracleStream = 0x0c1e;
constexpr std::uint64_t kSplitStream = 0x5b17;

}  // namespace

ParamStrategy parse_param_strategy(const std::string& name) {
  if (name == "theory_noisy") return ParamStrategy::theory_noisy;
  if (name == "theory_noiseless") return ParamStrategy::theory_noiseless;
  if (name == "theory_wide") return ParamStrategy::theory_wide;
  if (name == "fixed") return ParamStrategy::fixed;
  throw Error("unknown param_strategy '" + name + "'");
}

std::string to_string(ParamStrategy s) {
  switch (s) {
    case ParamStrategy::theory_noisy: return "theory_noisy";
    case ParamStrategy::theory_noiseless: return "theory_noiseless";
    case ParamStrategy::theory_wide: return "theory_wide";
    case ParamStrategy::fixed: return "fixed";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw Error("experiment: n_grid must be nonempty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) throw Error("experiment: n_grid values must be >= 2");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw Error("experiment: n_grid must be strictly ascending");
  }
  if (reps < 1) throw Error("experiment: reps must be >= 1");
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw Error("experiment: train_frac must be in (0, 1)");
  if (oracle_n < 1) throw Error("experiment: oracle_n must be >= 1");
  if (degree && (*degree < 0 || *degree > 2)) throw Error("experiment: m must be 0, 1 or 2");
  fit.validate();
}

ExperimentConfig read_experiment_config(const KeyValueConfig& kv) {
  ExperimentConfig c;
  c.experiment_id = kv.get_string("experiment_id", c.experiment_id);
  c.model = read_model_config(kv);
  if (kv.has("n_grid")) {
    c.n_grid.clear();
    for (const double v : kv.get_doubles("n_grid")) {
      if (v != std::floor(v)) throw Error("n_grid entries must be integers");
      c.n_grid.push_back(static_cast<long long>(v));
    }
  }
  c.reps = static_cast<int>(kv.get_int("reps", c.reps));
  c.train_frac = kv.get_double("train_frac", c.train_frac);
  c.strategy = parse_param_strategy(kv.get_string("param_strategy", to_string(c.strategy)));
  c.fit = read_fit_config(kv, "fit.");
  if (kv.has("fit.m")) c.degree = c.fit.m;
  c.abs = AbsoluteConstants::from_config(kv, "abs.");
  c.seminorm_rho = kv.get_double("theory.seminorm_rho", c.seminorm_rho);
  c.oracle_n = kv.get_int("oracle_n", c.oracle_n);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.threads = static_cast<unsigned>(kv.get_int("threads", c.threads));
  c.record_timings = kv.get_bool("timings", c.record_timings);
  kv.check_all_used();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return read_experiment_config(KeyValueConfig::load(path));
}

double MetricsRow::field(const std::string& name) const {
  if (name == "n") return static_cast<double>(n);
  if (name == "d") return d;
  if (name == "rep") return rep;
  if (name == "sigma_zeta") return sigma_zeta;
  if (name == "sigma_gamma") return sigma_gamma;
  if (name == "l") return l;
  if (name == "j") return j;
  if (name == "m") return m;
  if (name == "mse") return mse;
  if (name == "rel_mse") return rel_mse;
  if (name == "center_err") return center_err;
  if (name == "vec_err") return vec_err;
  if (name == "h_mean") return h_mean;
  if (name == "misclass2") return misclass2;
  if (name == "fit_ms") return fit_ms;
  if (name == "pred_ms") return pred_ms;
  if (name == "failed") return failed ? 1.0 : 0.0;
  throw Error("unknown metrics field '" + name + "'");
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const MetricsRow& r : rows) {
    out << r.experiment_id << ',' << r.curve_kind << ',' << r.d << ',' << r.n << ',' << r.rep << ','
        << num(r.sigma_zeta) << ',' << num(r.sigma_gamma) << ',' << r.l << ',' << r.j << ',' << r.m << ','
        << num(r.mse) << ',' << num(r.rel_mse) << ',' << num(r.center_err) << ',' << num(r.vec_err) << ','
        << num(r.h_mean) << ',' << num(r.misclass2) << ',' << num(r.fit_ms) << ',' << num(r.pred_ms) << ','
        << (r.failed ? 1 : 0) << '\n';
  }
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_metrics_csv(out, rows);
  if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw Error(path + ": unexpected CSV header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 19) throw Error(path + ": row has " + std::to_string(f.size()) + " fields");
    MetricsRow r;
    r.experiment_id = f[0];
    r.curve_kind = f[1];
    r.d = static_cast<int>(parse_int(f[2], "d"));
    r.n = parse_int(f[3], "n");
    r.rep = static_cast<int>(parse_int(f[4], "rep"));
    auto real = [&](std::size_t i) {
      return f[i] == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_double(f[i], "metric");
    };
    r.sigma_zeta = real(5);
    r.sigma_gamma = real(6);
    r.l = static_cast<int>(parse_int(f[7], "l"));
    r.j = static_cast<int>(parse_int(f[8], "j"));
    r.m = static_cast<int>(parse_int(f[9], "m"));
    r.mse = real(10);
    r.rel_mse = real(11);
    r.center_err = real(12);
    r.vec_err = real(13);
    r.h_mean = real(14);
    r.misclass2 = real(15);
    r.fit_ms = real(16);
    r.pred_ms = real(17);
    r.failed = parse_int(f[18], "failed") != 0;
    rows.push_back(std::move(r));
  }
  return rows;
}

OracleSliceParams compute_oracle_params(const DiscretizedCurve& curve, const ParameterSample& oracle,
                                        const RangePartition& partition) {
  const int l = partition.count();
  const int d = curve.dim();
  std::vector<Vector> sum_p(static_cast<std::size_t>(l), Vector::Zero(d));
  std::vector<Vector> sum_t(static_cast<std::size_t>(l), Vector::Zero(d));
  std::vector<Index> count(static_cast<std::size_t>(l), 0);
  Vector p(d), dp(d);
  for (Index i = 0; i < oracle.t.size(); ++i) {
    const double y = oracle.Y(i);
    if (y < partition.knots.front() || y > partition.knots.back()) continue;
    const auto h = static_cast<std::size_t>(partition.slice_of(y));
    curve.evaluate(oracle.t(i), p, dp);
    sum_p[h] += p;
    sum_t[h] += dp / dp.norm();
    ++count[h];
  }
  OracleSliceParams out;
  out.mean.resize(static_cast<std::size_t>(l));
  out.tangent.resize(static_cast<std::size_t>(l));
  for (std::size_t h = 0; h < static_cast<std::size_t>(l); ++h) {
    if (count[h] == 0) continue;
    const double nrm = sum_t[h].norm();
    if (!(nrm > 0.0)) continue;
    out.mean[h] = Vector(sum_p[h] / static_cast<double>(count[h]));
    out.tangent[h] = Vector(sum_t[h] / nrm);
  }
  return out;
}

OracleSliceParams compute_oracle_params(const ModelSpec& model, const RangePartition& partition,
                                        long long oracle_n, std::uint64_t seed) {
  if (oracle_n < 10LL * partition.count() * model.dim())
    throw Error("compute_oracle_params: oracle_n must be at least 10 * l * d");
  return compute_oracle_params(model.curve(), sample_parameters(model, oracle_n, seed), partition);
}

TrainTestSplit split_indices(Index n, double train_frac, std::uint64_t seed) {
  if (n < 2) throw Error("split_indices: need at least two samples");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(derive_seed({seed, kSplitStream}));
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::clamp<double>(std::floor(train_frac * static_cast<double>(n)), 1.0, static_cast<double>(n - 1)));
  TrainTestSplit s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

double mean_squared_error(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size() || a.size() == 0) throw Error("mean_squared_error: size mismatch");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double relative_mse(const Eigen::Ref<const Vector>& prediction, const Eigen::Ref<const Vector>& truth) {
  const double mse = mean_squared_error(prediction, truth);
  const double var = (truth.array() - truth.mean()).square().mean();
  return var > 0.0 ? mse / var : std::numeric_limits<double>::quiet_NaN();
}

SliceParameterErrors slice_parameter_errors(const SvrModel& model, const OracleSliceParams& oracle) {
  SliceParameterErrors e;
  double c_sum = 0.0, v_sum = 0.0, h_sum = 0.0;
  std::size_t c_n = 0, h_n = 0;
  for (const int h : model.heavy) {
    const SliceStats& s = model.slices[static_cast<std::size_t>(h)];
    h_sum += s.H;
    ++h_n;
    const auto hs = static_cast<std::size_t>(h);
    if (hs >= oracle.mean.size() || !oracle.mean[hs] || !oracle.tangent[hs]) continue;
    const Vector& g = *oracle.tangent[hs];
    c_sum += std::abs((s.mean - *oracle.mean[hs]).dot(g));
    v_sum += std::min((s.sig_vec - g).norm(), (s.sig_vec + g).norm());
    ++c_n;
  }
  if (h_n > 0) e.h_mean = h_sum / static_cast<double>(h_n);
  if (c_n > 0) {
    e.center_err = c_sum / static_cast<double>(c_n);
    e.vec_err = v_sum / static_cast<double>(c_n);
  }
  return e;
}

ExperimentRunner::ExperimentRunner(ExperimentConfig config)
    : config_(std::move(config)), model_(build_model(config_.model)) {
  config_.validate();
  if (config_.strategy != ParamStrategy::fixed)
    theory_ = theory_constants_for(model_, config_.abs, config_.seminorm_rho);
  oracle_ = sample_parameters(model_, config_.oracle_n, derive_seed({config_.seed, kOracleStream}));
}

FitConfig ExperimentRunner::fit_config_for(long long n_train) const {
  FitConfig fc = config_.fit;
  fc.m = config_.degree ? *config_.degree : default_degree(model_.link().s);
  Selection sel;
  switch (config_.strategy) {
    case ParamStrategy::fixed: return fc;
    case ParamStrategy::theory_noisy: sel = select_noisy(*theory_, n_train); break;
    case ParamStrategy::theory_noiseless: sel = select_noiseless(*theory_, n_train); break;
    case ParamStrategy::theory_wide: sel = select_wide(*theory_); break;
  }
  fc.l = sel.l;
  fc.j = sel.j;
  return fc;
}

ExperimentRunner::Cell ExperimentRunner::make_cell(long long n, int rep) const {
  const std::uint64_t cell_seed =
      derive_seed({config_.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
  const Dataset all = sample_dataset(model_, n, cell_seed);
  const TrainTestSplit split = split_indices(n, config_.train_frac, cell_seed);
  std::vector<Index> both;
  std::set_intersection(split.train.begin(), split.train.end(), split.test.begin(), split.test.end(),
                        std::back_inserter(both));
  if (!both.empty()) throw Error("train/test split overlaps");
  Cell c{all.subset(split.train), all.subset(split.test), Vector()};
  c.truth.resize(c.test.size());
  for (Index i = 0; i < c.test.size(); ++i) c.truth(i) = model_.link()((*c.test.oracle_t)(i));
  return c;
}

MetricsRow ExperimentRunner::run_cell(long long n, int rep) const {
  using clock = std::chrono::steady_clock;
  MetricsRow row;
  row.experiment_id = config_.experiment_id;
  row.curve_kind = to_string(config_.model.curve.kind);
  row.d = model_.dim();
  row.n = n;
  row.rep = rep;
  row.sigma_zeta = model_.sigma_zeta();
  row.sigma_gamma = model_.sigma_gamma();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const Cell cell = make_cell(n, rep);
    const FitConfig fc = fit_config_for(cell.train.size());
    row.l = fc.l;
    row.j = fc.j;
    row.m = fc.m;

    const auto t0 = clock::now();
    const SvrModel fitted = fit(cell.train, fc);
    const auto t1 = clock::now();
    const PredictionBatch pred = predict_detailed(fitted, cell.test.X, 1);
    const auto t2 = clock::now();
    if (config_.record_timings) {
      row.fit_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      row.pred_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    }

    row.mse = mean_squared_error(pred.values, cell.truth);
    row.rel_mse = relative_mse(pred.values, cell.truth);
    Index far = 0;
    for (Index i = 0; i < cell.truth.size(); ++i)
      if (std::abs(pred.slices[static_cast<std::size_t>(i)] - fitted.partition.slice_of(cell.truth(i))) >= 2) ++far;
    row.misclass2 = static_cast<double>(far) / static_cast<double>(cell.truth.size());

    if (config_.oracle_n < 10LL * fitted.partition.count() * model_.dim())
      throw Error("oracle_n must be at least 10 * l * d");
    const SliceParameterErrors e =
        slice_parameter_errors(fitted, compute_oracle_params(model_.curve(), oracle_, fitted.partition));
    row.center_err = e.center_err;
    row.vec_err = e.vec_err;
    row.h_mean = e.h_mean;
  } catch (const std::exception& ex) {
    std::cerr << "experiment " << config_.experiment_id << ": n=" << n << " rep=" << rep << " failed: " << ex.what()
              << '\n';
    row.failed = true;
    row.mse = row.rel_mse = row.center_err = row.vec_err = row.h_mean = row.misclass2 = nan;
  }
  return row;
}

std::vector<MetricsRow> ExperimentRunner::run() const {
  std::vector<std::pair<long long, int>> cells;
  for (const long long n : config_.n_grid)
    for (int r = 0; r < config_.reps; ++r) cells.emplace_back(n, r);
  std::vector<MetricsRow> rows(cells.size());
  parallel_for(
      cells.size(), [&](std::size_t i) { rows[i] = run_cell(cells[i].first, cells[i].second); }, config_.threads);
  return rows;
}

ExperimentRunner::Saturation ExperimentRunner::mse_at_saturation() const {
  const long long n = config_.n_grid.back();
  std::vector<Cell> cells;
  for (int r = 0; r < config_.reps; ++r) cells.push_back(make_cell(n, r));
  const FitConfig base = fit_config_for(cells.front().train.size());
  const long long cap = std::max<long long>(1, cells.front().train.size() / (2 * model_.dim()));
  std::set<int> ls;
  for (const long long l : {std::max<long long>(1, base.l / 2), static_cast<long long>(base.l), 2LL * base.l})
    ls.insert(static_cast<int>(std::min(l, cap)));

  Saturation best{std::numeric_limits<double>::infinity(), 0, 0};
  for (const int l : ls) {
    for (const int j : {1, 2, 4}) {
      FitConfig fc = base;
      fc.l = l;
      fc.j = j;
      double total = 0.0;
      bool ok = true;
      for (const Cell& c : cells) {
        try {
          const RangePartition part = partition_range(c.train.Y, l, fc.partition);
          const OracleSliceParams oracle = compute_oracle_params(model_.curve(), oracle_, part);
          std::vector<SliceOverride> ov(oracle.mean.size());
          for (std::size_t h = 0; h < ov.size(); ++h) {
            ov[h].mean = oracle.mean[h];
            ov[h].direction = oracle.tangent[h];
          }
          const SvrModel fitted = fit_with_overrides(c.train.X, c.train.Y, fc, ov);
          total += mean_squared_error(predict(fitted, c.test.X, 1), c.truth);
        } catch (const Error&) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      const double avg = total / static_cast<double>(cells.size());
      if (avg < best.value) best = {avg, l, j};
    }
  }
  if (!std::isfinite(best.value)) throw Error("mse_at_saturation: every (l, j) candidate failed");
  return best;
}

std::vector<MetricsRow> run_experiment(const ExperimentConfig& config) { return ExperimentRunner(config).run(); }

double fit_rate(const std::vector<MetricsRow>& rows, const std::string& x_field, const std::string& y_field,
                double n_lo, double n_hi) {
  std::map<double, std::pair<double, int>> by_x;
  for (const MetricsRow& r : rows) {
    if (r.failed) continue;
    const double n = static_cast<double>(r.n);
    if (n < n_lo || n > n_hi) continue;
    const double x = r.field(x_field), y = r.field(y_field);
    if (!(x > 0.0) || !(y > 0.0)) throw Error("fit_rate: values must be positive");
    auto& acc = by_x[x];
    acc.first += y;
    acc.second += 1;
  }
  if (by_x.size() < 3) throw Error("fit_rate: need at least three distinct x values in the window");
  std::vector<double> lx, ly;
  for (const auto& [x, acc] : by_x) {
    lx.push_back(std::log(x));
    ly.push_back(std::log(acc.first / acc.second));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace svr
