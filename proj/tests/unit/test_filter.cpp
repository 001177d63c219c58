#include <doctest.h>

#include <cmath>

#include "huberfilt/datagen.hpp"
#include "huberfilt/filter.hpp"
#include "oracles.hpp"

using namespace huberfilt;

namespace {

ResolvedParams params_for(Eigen::Index n, Eigen::Index d, double eps) {
  AlgorithmParams p;
  p.eps = eps;
  return resolve(p, n, d);
}

double inlier_weight(const Dataset& d, const Vector& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i)
    if (d.is_inlier(i)) s += w[i];
  return s;
}

}  // namespace

TEST_CASE("downweight: nothing to do when the score mass is already small") {
  const Dataset data(RowMatrix::Zero(4, 1));
  const Vector w = Vector::Ones(4);
  Vector tau(4);
  tau << 0.1, 0.0, 0.2, 0.0;
  const auto out = downweight(data, w, tau, 1.0, 1.0, 2.0);
  CHECK(out.steps_taken == 0);
  CHECK(out.w_after == w);
  CHECK(out.stop_reason == FilterStop::threshold_met);
  CHECK(out.mass_removed_total == 0.0);
}

TEST_CASE("downweight: a point scoring exactly r is removed in one step") {
  const Dataset data(RowMatrix::Zero(5, 1));
  const Vector w = Vector::Ones(5);
  Vector tau = Vector::Zero(5);
  tau[3] = 4.0;
  const double T = 0.1, beta = 1.5;  // T·beta < tau/n
  const auto out = downweight(data, w, tau, 4.0, T, beta);
  CHECK(out.steps_taken == 1);
  CHECK(out.w_after[3] == 0.0);
  for (int i : {0, 1, 2, 4}) CHECK(out.w_after[i] == 1.0);
  CHECK(out.mass_removed_total == doctest::Approx(1.0));
}

TEST_CASE("downweight: binary search agrees with a linear scan on 100 random instances") {
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    CAPTURE(t);
    const Eigen::Index n = 100;
    const Dataset data(RowMatrix::Zero(n, 1), std::vector<std::uint8_t>(n, 1));
    Vector w(n), tau(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      w[i] = rng.uniform(0.0, 1.0);
      tau[i] = rng.bernoulli(0.3) ? rng.uniform(0.0, 10.0) : 0.0;
    }
    const double r = tau.maxCoeff() > 0 ? tau.maxCoeff() : 1.0;
    const double T = rng.uniform(0.01, 0.5), beta = rng.uniform(1.1, 4.0);
    const auto out = downweight(data, w, tau, r, T, beta);
    // Linear scan for the minimal exponent.
    const long ell_max = static_cast<long>(std::ceil(r / (std::exp(1.0) * T))) + 1;
    long scan = -1;
    for (long ell = 0; ell <= ell_max && scan < 0; ++ell) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += w[i] * std::pow(1.0 - tau[i] / r, double(ell)) * tau[i];
      if (s / n <= T * beta) scan = ell;
    }
    REQUIRE(scan >= 0);
    CHECK(out.steps_taken == scan);
    CHECK(out.stop_reason == FilterStop::threshold_met);
    CHECK(out.score_mass_after <= T * beta);
    CHECK((out.w_after.array() <= w.array()).all());
    CHECK((out.w_after.array() >= 0.0).all());
    CHECK(std::abs((w - out.w_after).sum() - out.mass_removed_total) < 1e-12);
    CHECK(std::abs(*out.mass_removed_inlier + *out.mass_removed_outlier - out.mass_removed_total) < 1e-12);
  }
}

TEST_CASE("downweight: argument checks") {
  const Dataset data(RowMatrix::Zero(2, 1));
  const Vector w = Vector::Ones(2);
  Vector tau(2);
  tau << 5.0, 0.0;
  CHECK_THROWS_AS(downweight(data, w, tau, 1.0, 1.0, 2.0), NumericalError);
  CHECK_THROWS_AS(downweight(data, w, tau, 5.0, 0.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(downweight(data, w, tau, 5.0, 1.0, 1.0), std::invalid_argument);
  // An unsupported point may exceed the cap.
  Vector w0 = w;
  w0[0] = 0.0;
  CHECK_NOTHROW(downweight(data, w0, tau, 1.0, 1.0, 2.0));
}

TEST_CASE("multidirectional filter") {
  Rng rng(40);
  const double eps = 0.05;
  SUBCASE("all scores below the cutoff: no-op") {
    const Dataset data(rng.normal_matrix(500, 8));
    const Vector w = Vector::Ones(500);
    const auto out = multidirectional_filter(data, w, eps, make_sketch(Matrix::Identity(4, 8)), params_for(500, 8, eps));
    CHECK(out.w_after == w);
    CHECK(out.steps_taken == 0);
  }
  SUBCASE("Gaussian inliers, d=64, k=16: at most 1% of points score") {
    const int d = 64, k = 16;
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
      Rng r(s);
      const Dataset data(r.normal_matrix(5000, d));
      const Matrix U = oracle::random_orthonormal(d, k, r).transpose();
      ResolvedParams p = params_for(5000, d, eps);
      const Vector w = Vector::Ones(5000);
      const Vector mu = data.points().colwise().mean().transpose();
      const Vector g = ((data.points().rowwise() - mu.transpose()) * U.transpose()).rowwise().squaredNorm();
      worst = std::max(worst, (g.array() > 100.0 * k).cast<double>().mean());
      const auto out = multidirectional_filter(data, w, eps, make_sketch(U), p);
      CHECK(out.mass_removed_total <= 0.01 * 5000);
    }
    CHECK(worst <= 0.01);
  }
  SUBCASE("planted far cluster along the sketch direction is removed") {
    // Rows as the algorithm produces them: power-iterated sketch rows of the
    // contaminated second-moment operator concentrate on the cluster
    // direction, so a cluster at distance 10·sqrt(k) scores ~100·k·frob_sq.
    const int d = 32, k = 16;
    for (int s = 0; s < 10; ++s) {
      Rng r(100 + s);
      ContaminationSpec spec = ContaminationSpec::parse("cluster:40");
      spec.direction_seed = s;
      const Dataset data = gen_mean_instance(d, 4000, eps, Vector::Zero(d), spec, r);
      const Vector w = Vector::Ones(data.n());
      const auto state = build_moment_state(data, w, SubspaceBasis(d), eps, 4.0);
      const auto U = gaussian_sketch(as_operator(state), k, 5, r);
      const auto out = multidirectional_filter(data, w, eps, U, params_for(data.n(), d, eps));
      double cluster_max = 0.0;
      for (Eigen::Index i = 0; i < data.n(); ++i)
        if (!data.is_inlier(i)) cluster_max = std::max(cluster_max, out.w_after[i]);
      CHECK(cluster_max < 0.1);
      CHECK(inlier_weight(data, out.w_after) >= 0.99 * inlier_weight(data, w));
      CHECK(*out.mass_removed_inlier < (eps / std::log(1 / eps)) * *out.mass_removed_outlier);
    }
  }
}

TEST_CASE("warm start") {
  const double eps = 0.05;
  SUBCASE("clean data stops immediately") {
    Rng rng(1);
    const Dataset data(rng.normal_matrix(50000, 64));
    const auto out = warm_start(data, eps, params_for(50000, 64, eps), rng);
    CHECK(out.rounds == 1);
    CHECK(out.stop_reason == FilterStop::converged);
    CHECK(out.w_after.minCoeff() == 1.0);
  }
  SUBCASE("point mass at distance sqrt(d): eigenvalue brought under target, few inliers lost") {
    const int d = 128;
    const long n = 40000;
    for (int s = 0; s < 3; ++s) {
      Rng rng(10 + s);
      ContaminationSpec spec = ContaminationSpec::parse("point_mass:" + std::to_string(std::sqrt(double(d))));
      spec.direction_seed = s;
      const Dataset data = gen_mean_instance(d, n, eps, Vector::Zero(d), spec, rng);
      const auto p = params_for(n, d, eps);
      const auto out = warm_start(data, eps, p, rng);
      CHECK(out.stop_reason == FilterStop::converged);
      // Dense check of the weighted covariance (normalized by the original n).
      const Vector& w = out.w_after;
      const double W = w.sum() / n;
      const Vector mu = (data.points().transpose() * w) / w.sum();
      const RowMatrix C = data.points().rowwise() - mu.transpose();
      const Matrix cov = (C.transpose() * (C.array().colwise() * w.array()).matrix()) / w.sum();
      Eigen::SelfAdjointEigenSolver<Matrix> eig(W * W * cov, Eigen::EigenvaluesOnly);
      const double l = std::log(1 / eps);
      CHECK(eig.eigenvalues().maxCoeff() <= 1.0 + 10.0 * eps * l * l);
      CHECK(*out.mass_removed_inlier <= 2.0 * eps / l * n);
      const double pm = out.w_after.sum();
      CHECK(pm < n);
    }
  }
}
