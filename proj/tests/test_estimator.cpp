#include "doctest.h"
#include "oracles.hpp"

#include "svr/estimator.hpp"
#include "svr/synthesis.hpp"

#include <cstring>
#include <random>

using namespace svr;

namespace {

DiscretizedCurve line_curve(int d, double length) {
  CurveSpec s;
  s.d = d;
  s.length = length;
  return build_curve(s, 4000);
}

DiscretizedCurve arc_curve(int d, double kappa, double length) {
  CurveSpec s;
  s.kind = CurveKind::circular_arc;
  s.d = d;
  s.kappa = kappa;
  s.length = length;
  return build_curve(s, 4000);
}

LinkSpec exp_link(double scale) {
  LinkSpec f;
  f.kind = LinkKind::exp_scaled;
  f.scale = scale;
  return f;
}

FitConfig cfg(int l, int j, int m) {
  FitConfig c;
  c.l = l;
  c.j = j;
  c.m = m;
  return c;
}

Vector to_vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

// 2d points +-sqrt(d lambda_k) e_k: mean zero, covariance diag(lambda).
PointMatrix cross_points(const Vector& lambda) {
  const Index d = lambda.size();
  PointMatrix P = PointMatrix::Zero(2 * d, d);
  for (Index k = 0; k < d; ++k) {
    const double c = std::sqrt(static_cast<double>(d) * lambda(k));
    P(2 * k, k) = c;
    P(2 * k + 1, k) = -c;
  }
  return P;
}

SliceStats manual_slice(const Vector& mean, const Vector& sig, double ratio, bool thin) {
  SliceStats s;
  const Index d = mean.size();
  s.mean = mean;
  s.sig_vec = sig;
  s.eigvals = Vector::Ones(d);
  s.eigvals(d - 1) = ratio;
  s.eigvecs = Matrix::Identity(d, d);
  s.H = thin ? 1.0 : -1.0;
  return s;
}

// Distance straight from the formula, without the library's packing.
double naive_distance(const SliceStats& s, const Vector& x) {
  double along = 0.0, sq = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    along += (x(k) - s.mean(k)) * s.sig_vec(k);
    sq += (x(k) - s.mean(k)) * (x(k) - s.mean(k));
  }
  const double ratio = s.eigvals(0) > 0 ? s.eigvals(s.eigvals.size() - 1) / s.eigvals(0) : 1.0;
  return s.H >= 0 ? along * along + ratio * sq : sq + ratio * along * along;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("partition_range") {
  SUBCASE("uniform split of {0,1,2,3}") {
    const RangePartition p = partition_range(to_vec({0, 1, 2, 3}), 2, PartitionMode::uniform);
    REQUIRE(p.knots.size() == 3);
    CHECK(p.knots[0] == 0.0);
    CHECK(p.knots[1] == 1.5);
    CHECK(p.knots[2] == 3.0);
    CHECK(p.slice_of(1.0) == 0);
    CHECK(p.slice_of(1.5) == 1);  // knot value goes to the right interval
    CHECK(p.slice_of(3.0) == 1);
  }
  SUBCASE("l = 1 covers everything") {
    const RangePartition p = partition_range(to_vec({5, -2, 7}), 1, PartitionMode::uniform);
    CHECK(p.count() == 1);
    CHECK(p.knots.front() == -2.0);
    CHECK(p.knots.back() == 7.0);
    CHECK(p.slice_of(7.0) == 0);
  }
  SUBCASE("quantile split puts two of eight points in each interval") {
    const Vector Y = to_vec({0.3, 9.1, 2.2, 4.4, 7.0, 1.1, 5.5, 8.8});
    const RangePartition p = partition_range(Y, 4, PartitionMode::quantile);
    const std::vector<int> slot = assign_slices(Y, p);
    std::vector<int> counts(4, 0);
    for (int s : slot) ++counts[static_cast<std::size_t>(s)];
    for (int c : counts) CHECK(c == 2);
    // Brute force: the two smallest values form slice 0.
    CHECK(slot[0] == 0);
    CHECK(slot[5] == 0);
    CHECK(slot[1] == 3);
  }
  SUBCASE("quantile with ties still places each point exactly once") {
    const Vector Y = to_vec({1, 1, 1, 1, 2, 2, 3, 3, 3});
    const RangePartition p = partition_range(Y, 3, PartitionMode::quantile);
    const std::vector<int> slot = assign_slices(Y, p);
    std::vector<int> counts(3, 0);
    for (int s : slot) ++counts[static_cast<std::size_t>(s)];
    CHECK(counts == std::vector<int>{3, 3, 3});
  }
  SUBCASE("identical responses collapse to one interval") {
    const RangePartition p = partition_range(to_vec({2, 2, 2}), 5, PartitionMode::uniform);
    CHECK(p.degenerate);
    CHECK(p.count() == 1);
  }
}

TEST_CASE("slice statistics") {
  SUBCASE("eigvals (1,1,1,0.01)") {
    const SliceStats s = summarize_slice(0, cross_points(to_vec({1, 1, 1, 0.01})));
    CHECK(s.H == doctest::Approx(std::log(100.0)).epsilon(1e-9));
    CHECK(s.thin());
    CHECK(std::abs(s.sig_vec(3)) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("eigvals (4,0.5,0.5,0.5)") {
    const SliceStats s = summarize_slice(0, cross_points(to_vec({4, 0.5, 0.5, 0.5})));
    CHECK(s.H == doctest::Approx(std::log(0.25 / 2.0)).epsilon(1e-9));
    CHECK_FALSE(s.thin());
    CHECK(std::abs(s.sig_vec(0)) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("isotropic slice") {
    const SliceStats s = summarize_slice(0, cross_points(to_vec({2, 2, 2, 2, 2})));
    CHECK(s.H == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
  SUBCASE("random slices agree with a Jacobi eigen-solver on a naive covariance") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    for (int rep = 0; rep < 10; ++rep) {
      const int d = 3 + rep % 5;
      PointMatrix P(40, d);
      std::vector<oracle::Vec> pts;
      for (Index i = 0; i < 40; ++i) {
        for (int k = 0; k < d; ++k) P(i, k) = g(rng) * (1.0 + k);
        pts.push_back(P.row(i).transpose());
      }
      oracle::Vec mean;
      const oracle::Mat cov = oracle::naive_covariance(pts, &mean);
      const oracle::Vec ev = oracle::jacobi_eigenvalues(cov);
      const SliceStats s = summarize_slice(0, P);
      CHECK((s.mean - mean).norm() < 1e-12);
      CHECK((s.eigvals - ev).norm() < 1e-9 * ev(0));
      CHECK(s.H == doctest::Approx(oracle::h_statistic(ev)).epsilon(1e-8));
      for (Index k = 1; k < d; ++k) CHECK(s.eigvals(k) <= s.eigvals(k - 1));
      CHECK(s.eigvals.minCoeff() >= 0.0);
      CHECK(s.sig_vec.norm() == doctest::Approx(1.0).epsilon(1e-12));
      const Vector& v = s.sig_vec;
      const double lam = s.thin() ? ev(d - 1) : ev(0);
      CHECK((cov * v - lam * v).norm() < 1e-8 * ev(0));
    }
  }
  SUBCASE("tiny slices are computed and only heaviness depends on the threshold") {
    PointMatrix X(6, 3);
    X << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2;
    const std::vector<std::vector<Index>> members{{0}, {1, 2, 3, 4, 5}};
    const std::vector<SliceStats> s = compute_slice_stats(X, members, 6, 1.0);
    CHECK(s[0].n == 1);
    CHECK(s[0].eigvals.isZero());
    CHECK_FALSE(s[0].heavy);  // 1 < 6 / 2
    CHECK(s[1].heavy);
    CHECK(s[0].sig_vec.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("slice distance") {
  const Vector mu = Vector::Zero(4);
  Vector e1 = Vector::Zero(4);
  e1(0) = 1.0;
  const Vector x = to_vec({1, 2, 0, 0});
  SUBCASE("x at the mean") {
    const SliceStats s = manual_slice(mu, e1, 0.01, true);
    CHECK(slice_distance(s, mu, DistanceMode::anisotropic) == 0.0);
    CHECK(slice_distance(s, mu, DistanceMode::mahalanobis) == 0.0);
  }
  SUBCASE("thin branch") {
    CHECK(slice_distance(manual_slice(mu, e1, 0.01, true), x, DistanceMode::anisotropic) ==
          doctest::Approx(1.05).epsilon(1e-12));
  }
  SUBCASE("wide branch") {
    CHECK(slice_distance(manual_slice(mu, e1, 0.1, false), x, DistanceMode::anisotropic) ==
          doctest::Approx(5.1).epsilon(1e-12));
  }
  SUBCASE("mahalanobis against a direct inverse square root") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    PointMatrix P(50, 4);
    for (Index i = 0; i < 50; ++i)
      for (int k = 0; k < 4; ++k) P(i, k) = g(rng) * (k + 1);
    const SliceStats s = summarize_slice(0, P);
    std::vector<oracle::Vec> pts;
    for (Index i = 0; i < 50; ++i) pts.push_back(P.row(i).transpose());
    oracle::Vec mean;
    const oracle::Mat cov = oracle::naive_covariance(pts, &mean);
    const Vector y = to_vec({0.3, -1, 2, 0.5});
    const double expected = std::sqrt((y - mean).dot(cov.inverse() * (y - mean)));
    CHECK(slice_distance(s, y, DistanceMode::mahalanobis) == doctest::Approx(expected).epsilon(1e-9));
  }
  SUBCASE("degenerate slice uses ratio 1") {
    SliceStats s = manual_slice(mu, e1, 0.0, true);
    s.eigvals.setZero();
    CHECK(s.ratio() == 1.0);
    CHECK(slice_distance(s, x, DistanceMode::anisotropic) == doctest::Approx(1.0 + 5.0));
  }
  SUBCASE("sign of the significant vector does not matter") {
    const SliceStats a = manual_slice(mu, e1, 0.3, true);
    const SliceStats b = manual_slice(mu, -e1, 0.3, true);
    CHECK(slice_distance(a, x, DistanceMode::anisotropic) == slice_distance(b, x, DistanceMode::anisotropic));
  }
}

TEST_CASE("local regressor") {
  SUBCASE("m = 0, j = 1 gives the pooled mean") {
    const std::vector<double> r{0.1, 0.5, 0.9, 1.3}, y{1, 2, 3, 6};
    const LocalRegressor reg = fit_local_regressor(0, r, y, 4, 1, 0, 0.0);
    CHECK(reg.evaluate(0.7) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("noiseless linear data are interpolated exactly with m = 1") {
    std::vector<double> r, y;
    for (int i = 0; i < 50; ++i) {
      r.push_back(-2.0 + 0.1 * i);
      y.push_back(3.0 * r.back() - 1.0);
    }
    const LocalRegressor reg = fit_local_regressor(0, r, y, 50, 2, 1, 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(reg.evaluate(r[i]) - y[i]) <= 1e-9);
  }
  SUBCASE("quadratic data with m = 2") {
    std::vector<double> r, y;
    for (int i = 0; i < 40; ++i) {
      r.push_back(0.05 * i);
      y.push_back(r.back() * r.back() - r.back());
    }
    const LocalRegressor reg = fit_local_regressor(0, r, y, 40, 2, 2, 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(reg.evaluate(r[i]) - y[i]) <= 1e-9);
  }
  SUBCASE("twelve hand-built points, j = 2, m = 0") {
    // Interval [0, 11] splits at 5.5: r = 0..5 in bin 0, 6..11 in bin 1.
    std::vector<double> r, y;
    for (int i = 0; i < 12; ++i) {
      r.push_back(i);
      y.push_back(i * i);
    }
    const LocalRegressor reg = fit_local_regressor(0, r, y, 12, 2, 0, -1.0);
    const double mean0 = (0 + 1 + 4 + 9 + 16 + 25) / 6.0;
    const double mean1 = (36 + 49 + 64 + 81 + 100 + 121) / 6.0;
    CHECK(reg.bins[0].count == 6);
    CHECK(reg.bins[1].count == 6);
    CHECK(reg.evaluate(2.0) == doctest::Approx(mean0).epsilon(1e-12));
    CHECK(reg.evaluate(9.0) == doctest::Approx(mean1).epsilon(1e-12));
  }
  SUBCASE("bins below n_slice / j are excluded and use the fallback") {
    const std::vector<double> r{0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 10.0}, y{1, 1, 1, 1, 1, 1, 1, 50};
    const LocalRegressor reg = fit_local_regressor(0, r, y, 8, 2, 0, 7.0);
    CHECK(reg.bins[0].included);
    CHECK_FALSE(reg.bins[1].included);
    CHECK(reg.evaluate(9.0) == 7.0);
    CHECK(reg.evaluate(0.3) == doctest::Approx(1.0));
    CHECK(reg.evaluate(-5.0) == 7.0);
    CHECK(reg.evaluate(11.0) == 7.0);
  }
  SUBCASE("thin bins reduce the polynomial degree") {
    const std::vector<double> r{0.0, 1.0}, y{2.0, 4.0};
    const LocalRegressor reg = fit_local_regressor(0, r, y, 2, 1, 2, 0.0);
    CHECK(reg.bins[0].coeffs.size() == 2);
    CHECK(reg.evaluate(0.5) == doctest::Approx(3.0));
    const std::vector<double> r2{1.0, 1.0, 1.0}, y2{1.0, 2.0, 3.0};
    const LocalRegressor reg2 = fit_local_regressor(0, r2, y2, 3, 1, 2, 0.0);
    CHECK(reg2.evaluate(1.0) == doctest::Approx(2.0));
  }
}

TEST_CASE("fit preconditions") {
  PointMatrix X = PointMatrix::Random(7, 4);
  Vector Y = Vector::LinSpaced(7, 0, 1);
  CHECK_THROWS_AS(fit(X, Y, cfg(2, 1, 0)), Error);  // n < 2d
  PointMatrix X2 = PointMatrix::Random(30, 2);
  Vector Y2 = Vector::LinSpaced(30, 0, 1);
  CHECK_THROWS_AS(fit(X2, Y2, cfg(31, 1, 0)), Error);  // n < l
  FitConfig strict = cfg(3, 1, 0);
  strict.heavy_threshold_factor = 100.0;
  CHECK_THROWS_AS(fit(X2, Y2, strict), Error);  // no heavy slice
  FitConfig bad = cfg(3, 1, 3);
  CHECK_THROWS_AS(fit(X2, Y2, bad), Error);
}

TEST_CASE("constant link gives a constant predictor") {
  LinkSpec flat;
  flat.slope = 0.0;
  flat.offset = 4.25;
  const ModelSpec m(arc_curve(5, 0.3, 6.0), flat, 0.4, 0.0);
  const Dataset train = sample_dataset(m, 3000, 1);
  const Dataset test = sample_dataset(m, 500, 2);
  for (auto c : {cfg(10, 2, 1), cfg(1, 1, 0), cfg(4, 3, 2)}) {
    const SvrModel model = fit(train, c);
    const Vector p = predict(model, test.X);
    CHECK((p.array() - 4.25).abs().maxCoeff() <= 1e-9);
    CHECK(predict_point(model, train.X.row(17).transpose()) == doctest::Approx(4.25).epsilon(1e-12));
  }
}

TEST_CASE("single-index data: significant vectors align with the index") {
  const ModelSpec m(line_curve(10, 10.0), LinkSpec{}, 0.5, 0.0);
  const Dataset ds = sample_dataset(m, 50000, 5);
  const SvrModel model = fit(ds, cfg(20, 2, 1));
  int aligned = 0;
  for (int h : model.heavy)
    if (std::abs(model.slices[static_cast<std::size_t>(h)].sig_vec(0)) >= 0.95) ++aligned;
  CHECK(aligned >= 0.9 * static_cast<double>(model.heavy.size()));
}

TEST_CASE("noiseless line model prediction error bound") {
  const double len = 10.0;
  const int l = 50, j = 2;
  const ModelSpec m(line_curve(6, len), LinkSpec{}, 0.5, 0.0);
  const Dataset train = sample_dataset(m, 100000, 9);
  const Dataset test = sample_dataset(m, 1000, 10);
  const SvrModel model = fit(train, cfg(l, j, 1));
  const Vector p = predict(model, test.X);
  const double lip = 1.0;  // sup |f'| of the identity link
  const double bound = 10.0 * (len / (l * j)) * lip;
  double worst = 0.0;
  for (Index i = 0; i < test.size(); ++i) worst = std::max(worst, std::abs(p(i) - m.link()((*test.oracle_t)(i))));
  MESSAGE("max error " << worst << " bound " << bound);
  CHECK(worst <= bound);
}

TEST_CASE("nearest heavy slice") {
  SUBCASE("a single heavy slice is always chosen") {
    const ModelSpec m(line_curve(3, 2.0), LinkSpec{}, 0.2, 0.0);
    const Dataset ds = sample_dataset(m, 500, 3);
    const SvrModel model = fit(ds, cfg(1, 1, 0));
    CHECK(nearest_heavy_slice(model, to_vec({50, -3, 2})) == 0);
  }
  SUBCASE("point at a slice mean picks that slice") {
    const ModelSpec m(line_curve(4, 10.0), LinkSpec{}, 0.2, 0.0);
    const Dataset ds = sample_dataset(m, 4000, 4);
    const SvrModel model = fit(ds, cfg(8, 1, 0));
    for (int h : model.heavy) CHECK(nearest_heavy_slice(model, model.slices[static_cast<std::size_t>(h)].mean) == h);
  }
  SUBCASE("batch assignment equals a brute-force argmin") {
    const ModelSpec m(line_curve(5, 10.0), LinkSpec{}, 0.5, 0.05);
    const Dataset train = sample_dataset(m, 20000, 6);
    const Dataset test = sample_dataset(m, 10000, 7);
    const SvrModel model = fit(train, cfg(25, 2, 1));
    const PredictionBatch batch = predict_detailed(model, test.X);
    Index mismatches = 0;
    for (Index i = 0; i < test.size(); ++i) {
      const Vector x = test.X.row(i).transpose();
      int best = -1;
      double best_d = INFINITY;
      for (std::size_t h = 0; h < model.slices.size(); ++h) {
        const SliceStats& s = model.slices[h];
        if (!s.heavy) continue;
        const double dist = naive_distance(s, x);
        if (dist < best_d) {
          best_d = dist;
          best = static_cast<int>(h);
        }
      }
      if (best != batch.slices[static_cast<std::size_t>(i)]) ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("batch prediction matches pointwise prediction for any thread count") {
  const ModelSpec m(arc_curve(6, 0.2, 10.0), exp_link(10.0), 0.5, 0.03);
  const Dataset train = sample_dataset(m, 8000, 1);
  const Dataset test = sample_dataset(m, 3000, 2);
  FitConfig c = cfg(20, 2, 1);
  for (DistanceMode mode : {DistanceMode::anisotropic, DistanceMode::mahalanobis}) {
    c.distance = mode;
    const SvrModel model = fit(train, c);
    const Vector a = predict(model, test.X, 1);
    const Vector b = predict(model, test.X, 4);
    for (Index i = 0; i < test.size(); ++i) {
      CHECK(same_bits(a(i), b(i)));
      if (i % 100 == 0) CHECK(same_bits(a(i), predict_point(model, test.X.row(i).transpose())));
    }
  }
}

TEST_CASE("permutation invariance is bitwise") {
  const ModelSpec m(arc_curve(5, 0.2, 10.0), exp_link(10.0), 0.5, 0.03);
  const Dataset train = sample_dataset(m, 6000, 11);
  const Dataset test = sample_dataset(m, 1000, 12);
  std::vector<Index> perm(static_cast<std::size_t>(train.size()));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  const Dataset shuffled = train.subset(perm);
  for (PartitionMode pm : {PartitionMode::uniform, PartitionMode::quantile}) {
    FitConfig c = cfg(15, 2, 1);
    c.partition = pm;
    const Vector a = predict(fit(train, c), test.X);
    const Vector b = predict(fit(shuffled, c), test.X);
    bool all_same = true;
    for (Index i = 0; i < a.size(); ++i) all_same = all_same && same_bits(a(i), b(i));
    CHECK(all_same);
  }
}

TEST_CASE("rigid motions leave predictions unchanged") {
  const int d = 6;
  const ModelSpec m(arc_curve(d, 0.2, 10.0), exp_link(10.0), 0.5, 0.03);
  const Dataset train = sample_dataset(m, 8000, 13);
  const Dataset test = sample_dataset(m, 1000, 14);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Matrix A(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) A(r, c) = g(rng);
  const Matrix Q = Eigen::HouseholderQR<Matrix>(A).householderQ();
  Vector b(d);
  for (int k = 0; k < d; ++k) b(k) = 3.0 * g(rng);
  auto move = [&](const PointMatrix& X) {
    PointMatrix out = X * Q.transpose();
    out.rowwise() += b.transpose();
    return out;
  };
  for (DistanceMode mode : {DistanceMode::anisotropic, DistanceMode::mahalanobis}) {
    FitConfig c = cfg(20, 2, 1);
    c.distance = mode;
    const Vector a = predict(fit(train.X, train.Y, c), test.X);
    const Vector r = predict(fit(move(train.X), train.Y, c), move(test.X));
    CHECK((a - r).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("affine output scaling carries through") {
  const ModelSpec m(arc_curve(5, 0.2, 10.0), exp_link(10.0), 0.5, 0.03);
  const Dataset train = sample_dataset(m, 8000, 15);
  const Dataset test = sample_dataset(m, 1000, 16);
  const double a = 2.5, b = -1.25;
  const FitConfig c = cfg(20, 2, 1);
  const Vector base = predict(fit(train.X, train.Y, c), test.X);
  const Vector Ys = (a * train.Y.array() + b).matrix();
  const Vector scaled = predict(fit(train.X, Ys, c), test.X);
  CHECK((scaled - (a * base.array() + b).matrix()).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("negating a significant vector and refitting changes nothing") {
  const ModelSpec m(arc_curve(5, 0.2, 10.0), exp_link(10.0), 0.5, 0.03);
  const Dataset train = sample_dataset(m, 8000, 17);
  const Dataset test = sample_dataset(m, 1000, 18);
  const SvrModel model = fit(train, cfg(20, 3, 2));
  SvrModel flipped = model;
  for (int h : flipped.heavy)
    if (h % 2 == 0) flipped.slices[static_cast<std::size_t>(h)].sig_vec *= -1.0;
  refit_regressors(flipped, train.X, train.Y);
  for (int h : model.heavy) {
    const Vector x = test.X.row(h).transpose();
    CHECK(slice_distance(model.slices[static_cast<std::size_t>(h)], x, DistanceMode::anisotropic) ==
          doctest::Approx(slice_distance(flipped.slices[static_cast<std::size_t>(h)], x, DistanceMode::anisotropic))
              .epsilon(1e-12));
  }
  const Vector a = predict(model, test.X), b = predict(flipped, test.X);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("thin slices for many slices, wide slices for few") {
  const ModelSpec m(arc_curve(10, 0.2, 10.0), exp_link(10.0), 0.5, 0.0);
  const Dataset ds = sample_dataset(m, 20000, 19);
  auto fraction = [&](int l, bool thin) {
    const SvrModel model = fit(ds, cfg(l, 1, 0));
    int hits = 0;
    for (int h : model.heavy) hits += model.slices[static_cast<std::size_t>(h)].thin() == thin ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(model.heavy.size());
  };
  CHECK(fraction(60, true) >= 0.9);
  CHECK(fraction(2, false) >= 0.9);
}

TEST_CASE("predict is total and clipped") {
  const ModelSpec m(arc_curve(4, 0.3, 6.0), exp_link(6.0), 0.5, 0.1);
  const Dataset train = sample_dataset(m, 4000, 20);
  FitConfig c = cfg(10, 2, 2);
  c.M = Bound(8.0);
  const SvrModel model = fit(train, c);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int i = 0; i < 2000; ++i) {
    Vector x(4);
    for (int k = 0; k < 4; ++k) x(k) = g(rng);
    const double v = predict_point(model, x);
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) <= 8.0);
  }
}

TEST_CASE("strict fallback predicts zero outside the fitted bins") {
  const ModelSpec m(line_curve(3, 5.0), LinkSpec{}, 0.2, 0.0);
  const Dataset train = sample_dataset(m, 2000, 21);
  FitConfig c = cfg(5, 2, 1);
  c.strict_zero_fallback = true;
  const SvrModel model = fit(train, c);
  CHECK(predict_point(model, to_vec({1e6, 0, 0})) == 0.0);
  c.strict_zero_fallback = false;
  const SvrModel lenient = fit(train, c);
  const Vector far = to_vec({1e6, 0, 0});
  const LocalRegressor& reg = lenient.regressor_for(nearest_heavy_slice(lenient, far));
  CHECK(reg.bin_of(far.dot(lenient.slices[static_cast<std::size_t>(reg.h)].sig_vec)) == -1);
  CHECK(predict_point(lenient, far) == doctest::Approx(reg.fallback));
}

TEST_CASE("classification indices") {
  const ModelSpec m(line_curve(4, 10.0), LinkSpec{}, 0.3, 0.0);
  const Dataset ds = sample_dataset(m, 20000, 22);
  const SvrModel model = fit(ds, cfg(10, 1, 1));
  const RangePartition& p = model.partition;
  SUBCASE("interval midpoint of a heavy slice") {
    for (int h : model.heavy) {
      const double mid = 0.5 * (p.knots[static_cast<std::size_t>(h)] + p.knots[static_cast<std::size_t>(h) + 1]);
      Vector x = Vector::Zero(4);
      x(0) = mid;
      const ClassificationIndices ci = classification_indices(model, x, mid);
      CHECK(ci.truth == h);
      CHECK(ci.assigned == h);
    }
  }
  SUBCASE("knot values belong to the right interval; outside values are clamped") {
    CHECK(classification_indices(model, Vector::Zero(4), p.knots[3]).truth == 3);
    CHECK(classification_indices(model, Vector::Zero(4), p.knots.front() - 5.0).truth == 0);
    CHECK(classification_indices(model, Vector::Zero(4), p.knots.back() + 5.0).truth == p.count() - 1);
  }
}

TEST_CASE("overrides replace centers and directions") {
  const ModelSpec m(arc_curve(4, 0.2, 10.0), LinkSpec{}, 0.3, 0.0);
  const Dataset ds = sample_dataset(m, 5000, 23);
  std::vector<SliceOverride> ov(5);
  Vector dir = Vector::Zero(4);
  dir(1) = 2.0;
  ov[2].direction = dir;
  ov[2].mean = Vector::Ones(4);
  const SvrModel model = fit_with_overrides(ds.X, ds.Y, cfg(5, 1, 1), ov);
  CHECK(model.slices[2].sig_vec(1) == doctest::Approx(1.0));
  CHECK(model.slices[2].mean == Vector::Ones(4));
  ov[3].direction = Vector::Ones(3);
  CHECK_THROWS_AS(fit_with_overrides(ds.X, ds.Y, cfg(5, 1, 1), ov), Error);
}
