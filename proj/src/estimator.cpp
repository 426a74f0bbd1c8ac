#include "svr/estimator.hpp"

#include "svr/parallel.hpp"

#include <algorithm>
#include <numeric>

namespace svr {

PartitionMode parse_partition_mode(const std::string& name) {
  if (name == "uniform") return PartitionMode::uniform;
  if (name == "quantile") return PartitionMode::quantile;
  throw Error("unknown partition mode '" + name + "'");
}

DistanceMode parse_distance_mode(const std::string& name) {
  if (name == "anisotropic") return DistanceMode::anisotropic;
  if (name == "mahalanobis") return DistanceMode::mahalanobis;
  throw Error("unknown distance mode '" + name + "'");
}

std::string to_string(PartitionMode mode) { return mode == PartitionMode::uniform ? "uniform" : "quantile"; }
std::string to_string(DistanceMode mode) { return mode == DistanceMode::anisotropic ? "anisotropic" : "mahalanobis"; }

void FitConfig::validate() const {
  if (l < 1) throw Error("fit config: l must be >= 1");
  if (j < 1) throw Error("fit config: j must be >= 1");
  if (m < 0 || m > 2) throw Error("fit config: m must be 0, 1 or 2");
  if (M.is_bounded() && !(M.value() > 0.0)) throw Error("fit config: M must be positive");
  if (!(heavy_threshold_factor >= 0.0) || !std::isfinite(heavy_threshold_factor))
    throw Error("fit config: heavy_threshold_factor must be >= 0");
}

int RangePartition::slice_of(double y) const {
  if (degenerate || knots.size() <= 2) return 0;
  const auto first = knots.begin() + 1;
  const auto last = knots.end() - 1;
  return static_cast<int>(std::upper_bound(first, last, y) - first);
}

RangePartition partition_range(const Eigen::Ref<const Vector>& Y, int l, PartitionMode mode) {
  if (l < 1) throw Error("partition_range: l must be >= 1");
  if (Y.size() < 1) throw Error("partition_range: empty response vector");
  if (!Y.allFinite()) throw Error("partition_range: non-finite response");
  RangePartition p;
  p.mode = mode;
  const double lo = Y.minCoeff(), hi = Y.maxCoeff();
  if (lo == hi) {
    p.degenerate = true;
    p.knots = {lo, hi};
    return p;
  }
  p.knots.resize(static_cast<std::size_t>(l) + 1);
  if (mode == PartitionMode::uniform) {
    const double width = (hi - lo) / l;
    for (int h = 0; h < l; ++h) p.knots[static_cast<std::size_t>(h)] = lo + width * h;
  } else {
    std::vector<double> sorted(Y.data(), Y.data() + Y.size());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<long long>(sorted.size());
    for (int h = 0; h < l; ++h) {
      const long long rank = std::min(n - 1, static_cast<long long>(h) * n / l);
      p.knots[static_cast<std::size_t>(h)] = sorted[static_cast<std::size_t>(rank)];
    }
    p.knots[0] = lo;
  }
  p.knots.back() = hi;
  return p;
}

std::vector<int> assign_slices(const Eigen::Ref<const Vector>& Y, const RangePartition& partition) {
  const Index n = Y.size();
  std::vector<int> out(static_cast<std::size_t>(n), 0);
  if (partition.degenerate) return out;
  if (partition.mode == PartitionMode::uniform) {
    for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = partition.slice_of(Y(i));
    return out;
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return Y(a) < Y(b); });
  const long long l = partition.count();
  for (long long r = 0, h = 0; r < n; ++r) {
    while (h + 1 < l && (h + 1) * n / l <= r) ++h;
    out[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = static_cast<int>(h);
  }
  return out;
}

double SliceStats::ratio() const {
  if (eigvals.size() == 0 || !(eigvals(0) > 0.0)) return 1.0;
  return eigvals(eigvals.size() - 1) / eigvals(0);
}

namespace {

void orient(Eigen::Ref<Vector> v) {
  Index arg = 0;
  for (Index k = 1; k < v.size(); ++k)
    if (std::abs(v(k)) > std::abs(v(arg))) arg = k;
  if (v(arg) < 0.0) v = -v;
}

double anisotropy(const Vector& lam) {
  const Index d = lam.size();
  if (d < 3 || !(lam(0) > 0.0)) return 0.0;
  const double floor = 1e-12 * lam(0);
  double mid = 0.0;
  for (Index k = 1; k + 1 < d; ++k) mid += std::log(std::max(lam(k), floor));
  mid /= static_cast<double>(d - 2);
  return 2.0 * mid - std::log(lam(0)) - std::log(std::max(lam(d - 1), floor));
}

}  // namespace

SliceStats summarize_slice(int h, const PointMatrix& members) {
  SliceStats s;
  s.h = h;
  s.n = members.rows();
  const Index d = members.cols();
  s.mean = Vector::Zero(d);
  s.eigvals = Vector::Zero(d);
  s.eigvecs = Matrix::Identity(d, d);
  if (s.n > 0) {
    s.mean = members.colwise().sum().transpose() / static_cast<double>(s.n);
    const PointMatrix centered = members.rowwise() - s.mean.transpose();
    const Matrix cov = (centered.transpose() * centered) / static_cast<double>(s.n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    s.eigvals = es.eigenvalues().reverse().cwiseMax(0.0);
    s.eigvecs = es.eigenvectors().rowwise().reverse();
  }
  s.H = anisotropy(s.eigvals);
  s.sig_vec = s.thin() ? Vector(s.eigvecs.col(d - 1)) : Vector(s.eigvecs.col(0));
  orient(s.sig_vec);
  return s;
}

std::vector<SliceStats> compute_slice_stats(const PointMatrix& X, const std::vector<std::vector<Index>>& members,
                                            Index n_total, double heavy_threshold_factor) {
  const double l = static_cast<double>(members.size());
  std::vector<SliceStats> out;
  out.reserve(members.size());
  for (std::size_t h = 0; h < members.size(); ++h) {
    PointMatrix rows(static_cast<Index>(members[h].size()), X.cols());
    for (std::size_t k = 0; k < members[h].size(); ++k) rows.row(static_cast<Index>(k)) = X.row(members[h][k]);
    SliceStats s = summarize_slice(static_cast<int>(h), rows);
    s.heavy = s.n > 0 && static_cast<double>(s.n) * l >= heavy_threshold_factor * static_cast<double>(n_total);
    out.push_back(std::move(s));
  }
  return out;
}

double slice_distance(const SliceStats& slice, const Eigen::Ref<const Vector>& x, DistanceMode mode) {
  const Vector diff = x - slice.mean;
  if (mode == DistanceMode::anisotropic) {
    const double along = diff.dot(slice.sig_vec);
    const double a = along * along;
    const double b = diff.squaredNorm();
    return slice.thin() ? a + slice.ratio() * b : b + slice.ratio() * a;
  }
  const double top = slice.eigvals.size() > 0 && slice.eigvals(0) > 0.0 ? slice.eigvals(0) : 1.0;
  const double floor = 1e-10 * top;
  double acc = 0.0;
  for (Index k = 0; k < diff.size(); ++k) {
    const double c = diff.dot(slice.eigvecs.col(k));
    acc += c * c / std::max(slice.eigvals(k), floor);
  }
  return std::sqrt(acc);
}

int LocalRegressor::bin_of(double r) const {
  if (bins.empty() || !(r >= lo && r <= hi)) return -1;
  const int j = static_cast<int>(bins.size());
  if (hi == lo) return 0;
  const int k = static_cast<int>((r - lo) / (hi - lo) * j);
  return std::clamp(k, 0, j - 1);
}

double LocalRegressor::evaluate(double r) const {
  const int k = bin_of(r);
  if (k < 0 || !bins[static_cast<std::size_t>(k)].included) return fallback;
  const BinFit& b = bins[static_cast<std::size_t>(k)];
  const double u = (r - b.center) / b.half_width;
  double acc = 0.0;
  for (Index p = b.coeffs.size(); p-- > 0;) acc = acc * u + b.coeffs(p);
  return acc;
}

LocalRegressor fit_local_regressor(int h, const std::vector<double>& r, const std::vector<double>& y,
                                   Index n_slice, int j, int m, double fallback) {
  if (r.size() != y.size()) throw Error("fit_local_regressor: size mismatch");
  if (j < 1 || m < 0) throw Error("fit_local_regressor: invalid j or m");
  LocalRegressor reg;
  reg.h = h;
  reg.fallback = fallback;
  if (r.empty()) return reg;
  const auto [mn, mx] = std::minmax_element(r.begin(), r.end());
  reg.lo = *mn;
  reg.hi = *mx;
  reg.bins.resize(static_cast<std::size_t>(j));

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(j));
  for (std::size_t i = 0; i < r.size(); ++i) members[static_cast<std::size_t>(reg.bin_of(r[i]))].push_back(i);

  const double width = (reg.hi - reg.lo) / j;
  for (int k = 0; k < j; ++k) {
    BinFit& b = reg.bins[static_cast<std::size_t>(k)];
    const auto& idx = members[static_cast<std::size_t>(k)];
    b.count = static_cast<Index>(idx.size());
    b.center = reg.lo + width * (k + 0.5);
    b.half_width = width > 0.0 ? 0.5 * width : 1.0;
    b.included = b.count > 0 && static_cast<double>(b.count) * j >= static_cast<double>(n_slice);
    if (!b.included) continue;

    Vector rhs(b.count);
    Vector u(b.count);
    for (Index i = 0; i < b.count; ++i) {
      rhs(i) = y[idx[static_cast<std::size_t>(i)]];
      u(i) = (r[idx[static_cast<std::size_t>(i)]] - b.center) / b.half_width;
    }
    int degree = static_cast<int>(std::min<Index>(m, b.count - 1));
    for (;;) {
      Matrix V(b.count, degree + 1);
      V.col(0).setOnes();
      for (int p = 1; p <= degree; ++p) V.col(p) = V.col(p - 1).cwiseProduct(u);
      Eigen::ColPivHouseholderQR<Matrix> qr(V);
      if (qr.rank() == degree + 1 || degree == 0) {
        b.coeffs = qr.solve(rhs);
        break;
      }
      degree = static_cast<int>(qr.rank()) - 1;
      if (degree < 0) degree = 0;
    }
  }
  return reg;
}

const LocalRegressor& SvrModel::regressor_for(int h) const {
  const auto it = std::lower_bound(heavy.begin(), heavy.end(), h);
  if (it == heavy.end() || *it != h) throw Error("regressor_for: slice is not heavy");
  return regressors[static_cast<std::size_t>(it - heavy.begin())];
}

namespace {

// Canonical ordering by (Y, X row) makes every accumulation independent of
// the input order.
std::vector<Index> canonical_order(const PointMatrix& X, const Eigen::Ref<const Vector>& Y) {
  std::vector<std::pair<double, Index>> keyed(static_cast<std::size_t>(Y.size()));
  for (Index i = 0; i < Y.size(); ++i) keyed[static_cast<std::size_t>(i)] = {Y(i), i};
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    for (Index k = 0; k < X.cols(); ++k)
      if (X(a.second, k) != X(b.second, k)) return X(a.second, k) < X(b.second, k);
    return false;
  });
  std::vector<Index> order(keyed.size());
  for (std::size_t k = 0; k < keyed.size(); ++k) order[k] = keyed[k].second;
  return order;
}

std::vector<std::vector<Index>> slice_members(const PointMatrix& X, const Eigen::Ref<const Vector>& Y,
                                              const RangePartition& partition) {
  const std::vector<Index> order = canonical_order(X, Y);
  Vector Yc(Y.size());
  for (std::size_t k = 0; k < order.size(); ++k) Yc(static_cast<Index>(k)) = Y(order[k]);
  const std::vector<int> slot = assign_slices(Yc, partition);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(partition.count()));
  for (std::size_t k = 0; k < order.size(); ++k) members[static_cast<std::size_t>(slot[k])].push_back(order[k]);
  return members;
}

void check_inputs(const PointMatrix& X, const Eigen::Ref<const Vector>& Y) {
  if (X.rows() != Y.size()) throw Error("fit: X and Y sizes differ");
  if (X.rows() < 1 || X.cols() < 1) throw Error("fit: empty training set");
  if (!X.allFinite() || !Y.allFinite()) throw Error("fit: non-finite training data");
}

// Rows copied into slice order so later passes read contiguous memory; members
// then index the copy and keep their canonical order, so sums are unchanged.
struct SliceOrdered {
  PointMatrix X;
  Vector Y;
  std::vector<std::vector<Index>> members;
};

SliceOrdered gather_by_slice(const PointMatrix& X, const Eigen::Ref<const Vector>& Y,
                             const std::vector<std::vector<Index>>& members) {
  SliceOrdered out;
  out.X.resize(X.rows(), X.cols());
  out.Y.resize(Y.size());
  out.members.resize(members.size());
  Index k = 0;
  for (std::size_t h = 0; h < members.size(); ++h) {
    out.members[h].reserve(members[h].size());
    for (const Index i : members[h]) {
      out.X.row(k) = X.row(i);
      out.Y(k) = Y(i);
      out.members[h].push_back(k++);
    }
  }
  return out;
}

void train_regressors(SvrModel& model, const PointMatrix& X, const Eigen::Ref<const Vector>& Y,
                      const std::vector<std::vector<Index>>& members) {
  model.regressors.clear();
  const int l = static_cast<int>(model.slices.size());
  for (const int h : model.heavy) {
    const Vector& v = model.slices[static_cast<std::size_t>(h)].sig_vec;
    std::vector<double> r, y;
    for (int g = std::max(0, h - 1); g <= std::min(l - 1, h + 1); ++g) {
      for (const Index i : members[static_cast<std::size_t>(g)]) {
        r.push_back(X.row(i).dot(v.transpose()));
        y.push_back(Y(i));
      }
    }
    double fallback = 0.0;
    if (!model.config.strict_zero_fallback && !y.empty()) {
      for (const double val : y) fallback += val;
      fallback /= static_cast<double>(y.size());
    }
    model.regressors.push_back(fit_local_regressor(h, r, y, model.slices[static_cast<std::size_t>(h)].n,
                                                   model.config.j, model.config.m, fallback));
  }
}

SvrModel fit_impl(const PointMatrix& X, const Eigen::Ref<const Vector>& Y, const FitConfig& config,
                  const std::vector<SliceOverride>* overrides) {
  config.validate();
  check_inputs(X, Y);
  if (X.rows() < std::max<Index>(config.l, 2 * X.cols()))
    throw Error("fit: need n >= max(l, 2d) training points");
  SvrModel model;
  model.config = config;
  model.d = static_cast<int>(X.cols());
  model.n_train = X.rows();
  model.partition = partition_range(Y, config.l, config.partition);
  const SliceOrdered so = gather_by_slice(X, Y, slice_members(X, Y, model.partition));
  const auto& members = so.members;
  model.slices = compute_slice_stats(so.X, members, X.rows(), config.heavy_threshold_factor);
  for (const SliceStats& s : model.slices)
    if (s.heavy) model.heavy.push_back(s.h);
  if (model.heavy.empty()) throw Error("fit: no heavy slice; lower l or heavy_threshold_factor");

  if (overrides) {
    for (std::size_t h = 0; h < model.slices.size() && h < overrides->size(); ++h) {
      SliceStats& s = model.slices[h];
      const SliceOverride& o = (*overrides)[h];
      if (o.mean) {
        if (o.mean->size() != model.d) throw Error("fit: override mean has wrong dimension");
        s.mean = *o.mean;
      }
      if (o.direction) {
        if (o.direction->size() != model.d) throw Error("fit: override direction has wrong dimension");
        const double nrm = o.direction->norm();
        if (!(nrm > 0.0)) throw Error("fit: override direction must be nonzero");
        s.sig_vec = *o.direction / nrm;
      }
    }
  }
  train_regressors(model, so.X, so.Y, members);
  return model;
}

struct PackedSlices {
  PointMatrix mean;
  PointMatrix dir;
  Vector ratio;
  std::vector<char> thin;
};

PackedSlices pack(const SvrModel& model) {
  const Index H = static_cast<Index>(model.heavy.size());
  PackedSlices p{PointMatrix(H, model.d), PointMatrix(H, model.d), Vector(H), std::vector<char>(model.heavy.size())};
  for (Index k = 0; k < H; ++k) {
    const SliceStats& s = model.slices[static_cast<std::size_t>(model.heavy[static_cast<std::size_t>(k)])];
    p.mean.row(k) = s.mean.transpose();
    p.dir.row(k) = s.sig_vec.transpose();
    p.ratio(k) = s.ratio();
    p.thin[static_cast<std::size_t>(k)] = s.thin() ? 1 : 0;
  }
  return p;
}

int nearest_packed(const SvrModel& model, const PackedSlices& p, const Eigen::Ref<const Vector>& x) {
  if (model.config.distance == DistanceMode::mahalanobis) {
    int best = model.heavy.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (const int h : model.heavy) {
      const double dist = slice_distance(model.slices[static_cast<std::size_t>(h)], x, DistanceMode::mahalanobis);
      if (dist < best_d) {
        best_d = dist;
        best = h;
      }
    }
    return best;
  }
  const Index d = x.size();
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < p.mean.rows(); ++k) {
    const double* mu = p.mean.row(k).data();
    const double* v = p.dir.row(k).data();
    double along = 0.0, sq = 0.0;
    for (Index c = 0; c < d; ++c) {
      const double diff = x(c) - mu[c];
      along += diff * v[c];
      sq += diff * diff;
    }
    const double a = along * along;
    const double dist = p.thin[static_cast<std::size_t>(k)] ? a + p.ratio(k) * sq : sq + p.ratio(k) * a;
    if (dist < best_d) {
      best_d = dist;
      best = k;
    }
  }
  return model.heavy[static_cast<std::size_t>(best)];
}

double predict_at(const SvrModel& model, int h, const Eigen::Ref<const Vector>& x) {
  const double r = x.dot(model.slices[static_cast<std::size_t>(h)].sig_vec);
  const double value = model.regressor_for(h).evaluate(r);
  if (model.config.M.is_unbounded()) return value;
  const double M = model.config.M.value();
  return std::clamp(value, -M, M);
}

}  // namespace

SvrModel fit(const PointMatrix& X, const Eigen::Ref<const Vector>& Y, const FitConfig& config) {
  return fit_impl(X, Y, config, nullptr);
}

SvrModel fit(const Dataset& data, const FitConfig& config) { return fit_impl(data.X, data.Y, config, nullptr); }

SvrModel fit_with_overrides(const PointMatrix& X, const Eigen::Ref<const Vector>& Y, const FitConfig& config,
                            const std::vector<SliceOverride>& overrides) {
  return fit_impl(X, Y, config, &overrides);
}

void refit_regressors(SvrModel& model, const PointMatrix& X, const Eigen::Ref<const Vector>& Y) {
  check_inputs(X, Y);
  if (X.cols() != model.d) throw Error("refit_regressors: dimension mismatch");
  train_regressors(model, X, Y, slice_members(X, Y, model.partition));
}

int nearest_heavy_slice(const SvrModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.d) throw Error("nearest_heavy_slice: dimension mismatch");
  if (model.heavy.empty()) throw Error("nearest_heavy_slice: model has no heavy slice");
  return nearest_packed(model, pack(model), x);
}

double predict_point(const SvrModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.d) throw Error("predict: dimension mismatch");
  if (model.heavy.empty()) throw Error("predict: model has no heavy slice");
  return predict_at(model, nearest_packed(model, pack(model), x), x);
}

PredictionBatch predict_detailed(const SvrModel& model, const PointMatrix& X, unsigned threads) {
  if (X.cols() != model.d) throw Error("predict: dimension mismatch");
  if (model.heavy.empty()) throw Error("predict: model has no heavy slice");
  const PackedSlices p = pack(model);
  PredictionBatch out{Vector(X.rows()), std::vector<int>(static_cast<std::size_t>(X.rows()))};
  constexpr Index kBlock = 1024;
  const std::size_t blocks = static_cast<std::size_t>((X.rows() + kBlock - 1) / kBlock);
  parallel_for(
      blocks,
      [&](std::size_t b) {
        const Index begin = static_cast<Index>(b) * kBlock;
        const Index end = std::min(X.rows(), begin + kBlock);
        Vector x(model.d);
        for (Index i = begin; i < end; ++i) {
          x = X.row(i).transpose();
          const int h = nearest_packed(model, p, x);
          out.slices[static_cast<std::size_t>(i)] = h;
          out.values(i) = predict_at(model, h, x);
        }
      },
      threads);
  return out;
}

Vector predict(const SvrModel& model, const PointMatrix& X, unsigned threads) {
  return predict_detailed(model, X, threads).values;
}

ClassificationIndices classification_indices(const SvrModel& model, const Eigen::Ref<const Vector>& x,
                                             double true_value) {
  return {nearest_heavy_slice(model, x), model.partition.slice_of(true_value)};
}

}  // namespace svr
