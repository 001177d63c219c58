#include <doctest.h>

#include <cmath>

#include "huberfilt/audit.hpp"
#include "huberfilt/datagen.hpp"
#include "huberfilt/filter.hpp"

using namespace huberfilt;

TEST_CASE("certificate audit") {
  Rng rng(1);
  const int d = 32;
  const Vector mu = rng.normal_vector(d);
  RowMatrix X = rng.normal_matrix(50000, d);
  X.rowwise() += mu.transpose();
  const Dataset data(std::move(X));
  const Vector w = Vector::Ones(data.n());
  const auto clean = audit_certificate(data, w, SubspaceBasis(d), mu, 0.05);
  CHECK(clean.pass);
  CHECK(clean.margin > 0.5 * clean.bound);
  CHECK(clean.error == doctest::Approx((data.points().colwise().mean().transpose() - mu).norm()));

  // Huge spread in one direction: the bound grows with the eigenvalue, so a
  // large mean shift in that same direction still passes.
  RowMatrix Y = data.points();
  for (Eigen::Index i = 0; i < 2500; ++i) Y(i, 0) += (i % 2 ? -1 : 1) * 200.0 + 4.0;
  const Dataset spread(std::move(Y));
  const auto loose = audit_certificate(spread, w, SubspaceBasis(d), mu, 0.05);
  CHECK(loose.lambda > 100.0);
  CHECK(loose.pass);

  // The set-aside subspace is excluded from both sides of the check.
  const Vector shift = Vector::Unit(d, 3) * 5.0;
  RowMatrix Z = data.points();
  Z.rowwise() += shift.transpose();
  const Dataset moved(std::move(Z));
  CHECK(!audit_certificate(moved, w, SubspaceBasis(d), mu, 0.05).pass);
  const auto b = SubspaceBasis::from_columns(Vector::Unit(d, 3));
  CHECK(audit_certificate(moved, w, b, mu, 0.05).pass);
}

TEST_CASE("filter mass audit") {
  CHECK(audit_filter_mass({}, 0.05, 1000).pass_rate == 1.0);
  const auto noop = audit_filter_mass({FilterCall{0.0, 0.0}}, 0.05, 1000);
  CHECK(noop.passes == 1);
  CHECK(noop.violations.empty());
  // Allowance: max(2·(eps/ln(1/eps))·outlier, 1e-3·n).
  const double ratio = 2 * 0.05 / std::log(20.0);
  const auto mixed = audit_filter_mass({{0.9, 0.0}, {1.1, 0.0}, {ratio * 500 - 1e-9, 500.0}, {ratio * 500 + 1.0, 500.0}},
                                       0.05, 1000);
  CHECK(mixed.calls == 4);
  CHECK(mixed.violations == std::vector<long>{1, 3});
  CHECK(mixed.pass_rate == 0.5);
  CHECK(mixed.outlier_total == 1000.0);

  // A planted far cluster: the warm-start calls remove outliers almost
  // exclusively.
  Rng rng(3);
  auto spec = ContaminationSpec::parse("point_mass:30");
  const Dataset data = gen_mean_instance(16, 40000, 0.05, Vector::Zero(16), spec, rng);
  AlgorithmParams p;
  p.eps = 0.05;
  const auto out = warm_start(data, 0.05, resolve(p, data.n(), 16), rng);
  const auto audit = audit_filter_mass(out.calls, 0.05, double(data.n()));
  CHECK(audit.outlier_total > 100 * audit.inlier_total);
  CHECK(audit.pass_rate >= 0.9);
}

TEST_CASE("goodness audit") {
  SUBCASE("Gaussian samples pass") {
    Rng rng(5);
    const Dataset data(rng.normal_matrix(100000, 64));
    const auto g = audit_goodness(data, Vector::Zero(64), 0.05, 0.05, 8, 20, rng);
    CHECK(g.median_ok);
    CHECK(g.mean_ok);
    CHECK(g.covariance_ok);
    CHECK(g.tail_ok);
    CHECK(g.all_ok());
  }
  SUBCASE("Cauchy samples fail the tail condition") {
    Rng rng(6);
    RowMatrix X(50000, 16);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = std::tan(M_PI * (rng.uniform() - 0.5));
    const auto g = audit_goodness(Dataset(std::move(X)), Vector::Zero(16), 0.05, 0.05, 4, 10, rng);
    CHECK(!g.tail_ok);
    CHECK(g.worst_tail_mass > g.tail_bound);
  }
  SUBCASE("vanishing deletion barely moves the moments") {
    Rng rng(7);
    const Dataset data(rng.normal_matrix(20000, 8));
    const auto g = audit_goodness(data, Vector::Zero(8), 0.05, 1e-5, 2, 10, rng);
    CHECK(g.worst_mean_shift <= 1e-3);
    CHECK(g.worst_cov_shift <= 1e-2);
  }
  SUBCASE("inputs are left untouched") {
    Rng rng(8);
    const Dataset data(rng.normal_matrix(5000, 4));
    const RowMatrix before = data.points();
    audit_goodness(data, Vector::Zero(4), 0.05, 0.05, 2, 5, rng);
    CHECK(data.points() == before);
  }
}

TEST_CASE("conditional audit") {
  SUBCASE("zero coefficients: the law of x is unchanged") {
    Rng rng(9);
    const auto c = audit_conditional(Vector::Zero(8), 1.0, ConditioningRegion{0.5, 1.0 / 3}, 50000, rng);
    CHECK(c.pass);
    CHECK(c.mean_gap_interval <= 3 * c.mean_stderr * std::sqrt(8.0));
  }
  SUBCASE("the interval law matches its analytic moments over 20 seeds") {
    const int d = 16;
    Vector beta = Vector::Zero(d);
    beta[0] = 0.1;
    const double sigma_y = std::sqrt(1 + beta.squaredNorm());
    int passed = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng(s);
      const auto c = audit_conditional(beta, 1.0, ConditioningRegion{0.5 * sigma_y, sigma_y / 3}, 40000, rng);
      CHECK(c.kept_fraction >= 0.2 * (1.0 / 3));
      CHECK(c.fraction_ok);
      if (c.pass) ++passed;
    }
    CHECK(passed >= 18);
  }
}
