#include "svr/synthesis.hpp"

#include "svr/parallel.hpp"
#include "svr/rng.hpp"

#include <algorithm>
#include <numeric>

namespace svr {

namespace {

constexpr Index kChunk = 4096;
constexpr std::uint64_t kDatasetStream = 0x5d1a;
constexpr std::uint64_t kParameterStream = 0x0a7e;

Bound reach_or_unbounded(const DiscretizedCurve& curve) {
  return curve.size() >= 100 ? reach_estimate(curve) : Bound::unbounded();
}

}  // namespace

ModelSpec::ModelSpec(DiscretizedCurve curve, LinkSpec link, double sigma_gamma, double sigma_zeta,
                     double trunc_frac, double line_tube_sigmas)
    : curve_(std::move(curve)),
      link_(std::move(link)),
      sigma_gamma_(sigma_gamma),
      sigma_zeta_(sigma_zeta),
      trunc_frac_(trunc_frac) {
  link_.validate();
  if (!(sigma_gamma > 0.0) || !std::isfinite(sigma_gamma)) throw Error("model: sigma_gamma must be > 0");
  if (!(sigma_zeta >= 0.0) || !std::isfinite(sigma_zeta)) throw Error("model: sigma_zeta must be >= 0");
  if (!(trunc_frac > 0.0 && trunc_frac < 1.0)) throw Error("model: trunc_frac must be in (0, 1)");
  if (!(line_tube_sigmas > 0.0)) throw Error("model: line tube width must be positive");
  reach_ = reach_or_unbounded(curve_);
  if (reach_.is_bounded()) {
    tube_radius_ = trunc_frac_ * reach_.value();
  } else {
    tube_radius_ = line_tube_sigmas * sigma_gamma_;
  }
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.seed = seed;
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.Y.resize(static_cast<Index>(rows.size()));
  if (oracle_t) out.oracle_t = Vector(static_cast<Index>(rows.size()));
  if (oracle_tangent) out.oracle_tangent = PointMatrix(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    if (i < 0 || i >= size()) throw Error("Dataset::subset: row out of range");
    const Index r = static_cast<Index>(k);
    out.X.row(r) = X.row(i);
    out.Y(r) = Y(i);
    if (oracle_t) (*out.oracle_t)(r) = (*oracle_t)(i);
    if (oracle_tangent) out.oracle_tangent->row(r) = oracle_tangent->row(i);
  }
  return out;
}

void apply_rotation(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) {
  const Index d = v.size();
  // w = (e_d - v) / ||e_d - v||, M = I - 2 w w^T.
  const double vd = v(d - 1);
  const double w2 = v.head(d - 1).squaredNorm() + (1.0 - vd) * (1.0 - vd);
  out.head(d - 1) = z;
  out(d - 1) = 0.0;
  if (w2 < 1e-24) return;
  // (w . (z, 0)) uses only the first d-1 entries where w = -v / ||e_d - v||.
  const double proj = -v.head(d - 1).dot(z);
  const double coef = 2.0 * proj / w2;
  out.head(d - 1) += coef * v.head(d - 1);
  out(d - 1) -= coef * (1.0 - vd);
}

Matrix rotation_to(const Eigen::Ref<const Vector>& v) {
  const Index d = v.size();
  if (d < 1) throw Error("rotation_to: empty vector");
  if (std::abs(v.norm() - 1.0) > 1e-9) throw Error("rotation_to: vector must have unit norm");
  Vector w = -v;
  w(d - 1) += 1.0;
  const double n2 = w.squaredNorm();
  if (n2 < 1e-24) return Matrix::Identity(d, d);
  return Matrix::Identity(d, d) - (2.0 / n2) * w * w.transpose();
}

Dataset sample_dataset(const ModelSpec& model, Index n, std::uint64_t seed) {
  if (n < 1) throw Error("sample_dataset: n must be >= 1");
  const DiscretizedCurve& curve = model.curve();
  const int d = curve.dim();
  const double len = curve.length();
  const double radius = model.tube_radius();
  const double sg = model.sigma_gamma();
  const double sz = model.sigma_zeta();

  Dataset ds;
  ds.seed = seed;
  ds.X.resize(n, d);
  ds.Y.resize(n);
  ds.oracle_t = Vector(n);
  ds.oracle_tangent = PointMatrix(n, d);

  const std::size_t chunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed({seed, kDatasetStream, c}));
    std::uniform_real_distribution<double> unif(0.0, len);
    std::normal_distribution<double> normal;
    Vector z(d - 1), p(d), dp(d), disp(d);
    const Index begin = static_cast<Index>(c) * kChunk;
    const Index end = std::min(n, begin + kChunk);
    double attempts = 0.0, accepted = 0.0;
    for (Index i = begin; i < end; ++i) {
      const double t = unif(rng);
      for (;;) {
        for (int k = 0; k < d - 1; ++k) z(k) = sg * normal(rng);
        attempts += 1.0;
        if (z.norm() < radius) break;
        if (attempts >= 1e5 && accepted < 1e-4 * attempts)
          throw Error("sample_dataset: tube acceptance probability below 1e-4; sigma_gamma too large for the reach");
      }
      accepted += 1.0;
      curve.evaluate(t, p, dp);
      dp /= dp.norm();
      if (d > 1) {
        apply_rotation(dp, z, disp);
        ds.X.row(i) = (p + disp).transpose();
      } else {
        ds.X.row(i) = p.transpose();
      }
      ds.Y(i) = model.link()(t) + sz * normal(rng);
      (*ds.oracle_t)(i) = t;
      ds.oracle_tangent->row(i) = dp.transpose();
    }
  });
  return ds;
}

ParameterSample sample_parameters(const ModelSpec& model, Index n, std::uint64_t seed) {
  if (n < 1) throw Error("sample_parameters: n must be >= 1");
  ParameterSample out{Vector(n), Vector(n)};
  const double len = model.curve().length();
  const std::size_t chunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed({seed, kParameterStream, c}));
    std::uniform_real_distribution<double> unif(0.0, len);
    std::normal_distribution<double> normal;
    const Index begin = static_cast<Index>(c) * kChunk;
    const Index end = std::min(n, begin + kChunk);
    for (Index i = begin; i < end; ++i) {
      const double t = unif(rng);
      out.t(i) = t;
      out.Y(i) = model.link()(t) + model.sigma_zeta() * normal(rng);
    }
  });
  return out;
}

double evaluate_F(const ModelSpec& model, const Eigen::Ref<const Vector>& x) {
  return model.link()(closest_point_projection(model.curve(), x).t);
}

namespace {

// Iterative segment tree answering min and max over index ranges.
class MinMaxTree {
 public:
  explicit MinMaxTree(const std::vector<double>& v) : n_(v.size()), lo_(2 * n_), hi_(2 * n_) {
    for (std::size_t i = 0; i < n_; ++i) lo_[n_ + i] = hi_[n_ + i] = v[i];
    for (std::size_t i = n_ - 1; i > 0; --i) {
      lo_[i] = std::min(lo_[2 * i], lo_[2 * i + 1]);
      hi_[i] = std::max(hi_[2 * i], hi_[2 * i + 1]);
    }
  }
  // [l, r)
  std::pair<double, double> query(std::size_t l, std::size_t r) const {
    double a = std::numeric_limits<double>::infinity(), b = -a;
    for (l += n_, r += n_; l < r; l >>= 1, r >>= 1) {
      if (l & 1) { a = std::min(a, lo_[l]); b = std::max(b, hi_[l]); ++l; }
      if (r & 1) { --r; a = std::min(a, lo_[r]); b = std::max(b, hi_[r]); }
    }
    return {a, b};
  }

 private:
  std::size_t n_;
  std::vector<double> lo_, hi_;
};

}  // namespace

MonotonicityConstants estimate_monotonicity_constants(const LinkSpec& link, double t_lo, double t_hi,
                                                      Index grid, double min_scale, double ratio_cap) {
  link.validate();
  if (!(t_hi > t_lo)) throw Error("estimate_monotonicity_constants: empty domain");
  if (grid < 3) throw Error("estimate_monotonicity_constants: grid too small");
  if (!(min_scale > 0.0)) throw Error("estimate_monotonicity_constants: min_scale must be positive");

  const std::size_t G = static_cast<std::size_t>(grid);
  const double h = (t_hi - t_lo) / static_cast<double>(G - 1);
  std::vector<double> t(G), f(G);
  for (std::size_t i = 0; i < G; ++i) {
    t[i] = t_lo + (t_hi - t_lo) * static_cast<double>(i) / static_cast<double>(G - 1);
    f[i] = link(t[i]);
  }
  std::vector<std::size_t> order(G);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
  std::vector<double> fs(G), ts(G);
  for (std::size_t k = 0; k < G; ++k) {
    fs[k] = f[order[k]];
    ts[k] = t[order[k]];
  }
  const double fmin = fs.front(), fmax = fs.back();
  const double range = fmax - fmin;
  if (!(range > 0.0)) throw Error("estimate_monotonicity_constants: link is constant on the domain");
  const MinMaxTree tree(ts);
  const double full_ratio = (t_hi - t_lo) / range;

  constexpr int kScales = 32;
  constexpr double kMaxPositions = 4096.0;
  std::vector<double> scales;
  if (min_scale >= range) {
    scales.push_back(range);
  } else {
    for (int k = 0; k < kScales; ++k)
      scales.push_back(min_scale * std::pow(range / min_scale, static_cast<double>(k) / (kScales - 1)));
  }

  struct ScaleStats { double min_ratio, max_ratio; bool pass; };
  std::vector<ScaleStats> stats;
  for (const double s : scales) {
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    std::size_t probed = 0;
    const double step = std::max(0.5 * s, (range - s) / kMaxPositions);
    auto probe = [&](double a) {
      const double b = a + s;
      const auto l = static_cast<std::size_t>(std::lower_bound(fs.begin(), fs.end(), a) - fs.begin());
      const auto r = static_cast<std::size_t>(std::upper_bound(fs.begin(), fs.end(), b) - fs.begin());
      if (r <= l) return;  // empty preimage: T is not in the image of f
      auto [lo, hi] = tree.query(l, r);
      // Extend the extreme nodes to where the piecewise-linear link crosses into [a, b].
      auto crossing = [&](std::size_t inside, std::size_t outside) {
        const double fo = f[outside], fi = f[inside];
        const double c = fo < a ? a : b;
        return t[outside] + (t[inside] - t[outside]) * (c - fo) / (fi - fo);
      };
      const auto i_lo = static_cast<std::size_t>(std::llround((lo - t_lo) / h));
      const auto i_hi = static_cast<std::size_t>(std::llround((hi - t_lo) / h));
      if (i_lo > 0) lo = crossing(i_lo, i_lo - 1);
      if (i_hi + 1 < G) hi = crossing(i_hi, i_hi + 1);
      const double ratio = (hi - lo) / s;
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
      ++probed;
    };
    for (double a = fmin; a + s <= fmax; a += step) probe(a);
    probe(fmax - s);
    if (probed == 0) throw Error("estimate_monotonicity_constants: every probed interval has an empty preimage");
    stats.push_back({rmin, rmax, rmin > 0.0 && rmax <= ratio_cap * full_ratio});
  }

  // Walk down from the largest scale while scales keep passing.
  std::size_t first_pass = stats.size();
  for (std::size_t k = stats.size(); k-- > 0;) {
    if (!stats[k].pass) break;
    first_pass = k;
  }
  MonotonicityConstants out;
  if (first_pass == stats.size()) {
    out.omega_f = range;
    out.C_f = stats.back().max_ratio;
    out.C_f_prime = stats.back().min_ratio;
    return out;
  }
  out.omega_f = first_pass == 0 ? 0.0 : scales[first_pass];
  out.C_f = 0.0;
  out.C_f_prime = std::numeric_limits<double>::infinity();
  for (std::size_t k = first_pass; k < stats.size(); ++k) {
    out.C_f = std::max(out.C_f, stats[k].max_ratio);
    out.C_f_prime = std::min(out.C_f_prime, stats[k].min_ratio);
  }
  return out;
}

double estimate_holder_seminorm(const LinkSpec& link, double t_lo, double t_hi, double s, Index grid) {
  link.validate();
  if (!(t_hi > t_lo)) throw Error("estimate_holder_seminorm: empty domain");
  if (!(s > 0.0 && s <= 2.0)) throw Error("estimate_holder_seminorm: s must be in (0, 2]");
  if (grid < 3) throw Error("estimate_holder_seminorm: grid too small");
  const double h = (t_hi - t_lo) / static_cast<double>(grid - 1);
  std::vector<double> x, v;
  double e = s;
  if (s <= 1.0) {
    for (Index i = 0; i < grid; ++i) {
      x.push_back(t_lo + h * static_cast<double>(i));
      v.push_back(link(x.back()));
    }
  } else {
    e = s - 1.0;
    for (Index i = 0; i + 1 < grid; ++i) {
      const double a = t_lo + h * static_cast<double>(i);
      x.push_back(a + 0.5 * h);
      v.push_back((link(a + h) - link(a)) / h);
    }
  }
  double best = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = a + 1; b < x.size(); ++b)
      best = std::max(best, std::abs(v[b] - v[a]) / std::pow(x[b] - x[a], e));
  return best;
}

}  // namespace svr
