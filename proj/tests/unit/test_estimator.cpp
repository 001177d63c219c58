#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "huberfilt/datagen.hpp"
#include "huberfilt/estimator.hpp"
#include "oracles.hpp"

using namespace huberfilt;

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

Vector beta_of_norm(int d, double norm, std::uint64_t seed) {
  Rng rng(seed);
  Vector b = rng.normal_vector(d);
  return norm * b / b.norm();
}

// Two-sample Kolmogorov–Smirnov p-value from the asymptotic distribution.
double ks_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double dmax = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    dmax = std::max(dmax, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  const double ne = double(a.size()) * b.size() / (a.size() + b.size());
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * dmax;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2 * (k % 2 ? 1 : -1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

TEST_CASE("trimmed mean") {
  CHECK(trimmed_mean(std::vector<double>(100, 3.25), 0.05) == 3.25);
  CHECK_THROWS_AS(trimmed_mean({}, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(trimmed_mean({1.0, 2.0}, 0.2), NumericalError);

  // Squared Gaussians (mean 1) with an eps-fraction planted far away on
  // either side.
  const double eps = 0.05, tol = eps * std::log(1 / eps) * 4.0;
  for (const double planted : {1e6, -1e6}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng(s);
      std::vector<double> v(100000);
      for (auto& x : v) x = std::pow(rng.normal(), 2);
      for (std::size_t i = 0; i < 5000; ++i) v[i] = planted;
      const double est = trimmed_mean(v, eps);
      CHECK(std::abs(est - 1.0) <= tol);
    }
  }
}

TEST_CASE("trimmed chi-square consistency factor matches Monte Carlo") {
  Rng rng(3);
  std::vector<double> v(1000000);
  for (auto& x : v) x = std::pow(rng.normal(), 2);
  std::sort(v.begin(), v.end());
  for (const double alpha : {0.05, 0.2, 0.4}) {
    const auto drop = static_cast<std::size_t>(alpha * v.size());
    double sum = 0.0;
    for (std::size_t i = drop; i < v.size() - drop; ++i) sum += v[i];
    const double mc = sum / double(v.size() - 2 * drop);
    CHECK(trimmed_chi2_mean(alpha) == doctest::Approx(mc).epsilon(5e-3));
  }
  CHECK(trimmed_chi2_mean(0.0) == 1.0);
}

TEST_CASE("robust mean on clean data tracks the sample mean") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    Rng rng(s);
    const Dataset data = gen_mean_instance(64, 50000, 0.05, Vector::Zero(64), ContaminationSpec{}, rng);
    Rng est(s + 100);
    const auto rep = robust_mean(data, 0.05, 0.5, AlgorithmParams{}, est);
    const double sm = sample_mean(data).norm();
    CHECK(rep.mu_hat.norm() <= 2 * sm + 0.02);
    CHECK(rep.mu_hat.allFinite());
    CHECK(rep.n1 + rep.n2 == data.n());
  }
}

TEST_CASE("robust mean under contamination") {
  const double eps = 0.05;
  const int d = 32;
  for (const char* adv : {"point_mass:3", "cluster:1.73", "subspace_spread:3.46:8"}) {
    CAPTURE(adv);
    std::vector<double> err, med;
    for (std::uint64_t s = 0; s < 5; ++s) {
      Rng rng(s);
      auto spec = ContaminationSpec::parse(adv);
      spec.direction_seed = s;
      const Dataset data = gen_mean_instance(d, 200000, eps, Vector::Zero(d), spec, rng);
      Rng est(s + 100);
      const auto rep = robust_mean(data, eps, 0.5, AlgorithmParams{}, est);
      err.push_back(rep.mu_hat.norm());
      med.push_back(coordinate_median(data).norm());
      REQUIRE(rep.inlier_mass_removed.has_value());
      CHECK(*rep.inlier_mass_removed <= 0.5 * eps * double(rep.n1));
    }
    CHECK(median_of(err) <= 4 * eps);
    CHECK(median_of(err) <= median_of(med));
  }
}

TEST_CASE("robust mean is deterministic and translation-equivariant") {
  Rng gen(8);
  auto spec = ContaminationSpec::parse("cluster:2");
  const Dataset data = gen_mean_instance(24, 40000, 0.1, Vector::Zero(24), spec, gen);
  Rng a(77), b(77);
  const auto x = robust_mean(data, 0.1, 0.5, AlgorithmParams{}, a);
  const auto y = robust_mean(data, 0.1, 0.5, AlgorithmParams{}, b);
  CHECK(x.mu_hat == y.mu_hat);

  Rng trng(9);
  const Vector t = 5.0 * trng.normal_vector(24);
  RowMatrix shifted = data.points();
  shifted.rowwise() += t.transpose();
  Rng c(77);
  const auto z = robust_mean(Dataset(std::move(shifted), data.labels()), 0.1, 0.5, AlgorithmParams{}, c);
  CHECK((z.mu_hat - x.mu_hat - t).norm() <= 1e-8);
}

TEST_CASE("robust mean is rotation-equivariant in distribution") {
  const int d = 16;
  Rng qrng(5);
  const Matrix Q = oracle::random_orthonormal(d, d, qrng);
  std::vector<double> plain, rotated;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    auto spec = ContaminationSpec::parse("point_mass:3");
    spec.direction_seed = s;
    const Dataset data = gen_mean_instance(d, 20000, 0.05, Vector::Zero(d), spec, rng);
    Rng e1(s + 1000), e2(s + 1000);
    plain.push_back(robust_mean(data, 0.05, 0.5, AlgorithmParams{}, e1).mu_hat.norm());
    const Dataset turned(RowMatrix(data.points() * Q.transpose()), data.labels());
    rotated.push_back(robust_mean(turned, 0.05, 0.5, AlgorithmParams{}, e2).mu_hat.norm());
  }
  CHECK(ks_pvalue(plain, rotated) > 0.01);
}

TEST_CASE("robust regression") {
  const double eps = 0.05, sigma = 1.0;
  const int d = 32;
  const auto none = ContaminationSpec{};

  SUBCASE("zero coefficients give a zero estimate") {
    Rng rng(1);
    const auto inst = gen_regression_instance(d, 200000, eps, Vector::Zero(d), sigma, none, rng);
    Rng est(2);
    const auto rep = robust_regression(inst, eps, 0.5, AlgorithmParams{}, est);
    CHECK(rep.beta_hat.norm() <= 6 * sigma * eps);
  }

  SUBCASE("kept fraction and interval placement on inlier-only data") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      Rng rng(s);
      const Vector beta = beta_of_norm(d, sigma * eps * std::log(1 / eps), s);
      const auto inst = gen_regression_instance(d, 200000, eps, beta, sigma, none, rng);
      Rng est(s + 50);
      const auto rep = robust_regression(inst, eps, 0.5, AlgorithmParams{}, est);
      const double sigma_y = std::sqrt(sigma * sigma + beta.squaredNorm());
      const double ratio = double(rep.kept_count) / double(inst.n()) / (rep.interval_half_length / sigma_y);
      CHECK(ratio >= 0.2);
      CHECK(ratio <= 5.0);
      CHECK(rep.interval_half_length > 0.0);
      CHECK(std::abs(rep.interval_center) >= 0.05 * rep.sigma_y_hat);
      CHECK(std::abs(rep.sigma_y_hat - sigma_y) <= 0.05 * sigma_y);
      CHECK(std::abs(rep.interval_center) + rep.interval_half_length <= 1.1 * sigma_y + 0.5);
      CHECK(std::abs(rep.interval_center) <= 1.1 * sigma_y);
    }
  }

  SUBCASE("scaling the labels scales the scale estimate exactly") {
    Rng rng(4);
    const auto inst = gen_regression_instance(d, 100000, eps, beta_of_norm(d, 0.15, 4), sigma, none, rng);
    auto scaled = inst;
    scaled.ys *= 4.0;
    Rng a(10), b(10);
    const auto r1 = robust_regression(inst, eps, 0.5, AlgorithmParams{}, a);
    const auto r2 = robust_regression(scaled, eps, 0.5, AlgorithmParams{}, b);
    CHECK(r2.sigma_y_hat == 4.0 * r1.sigma_y_hat);
    CHECK(r2.interval_center == 4.0 * r1.interval_center);
    CHECK(r2.kept_count == r1.kept_count);
    // Same kept rows, same inner stream: the inner estimate is unchanged and
    // the rescaling carries the factor.
    CHECK((r2.beta_hat - 4.0 * r1.beta_hat).norm() <= 1e-9 * (1 + r2.beta_hat.norm()));
  }

  SUBCASE("contaminated instances") {
    for (const char* adv : {"regression_hinge", "regression_label_flip"}) {
      CAPTURE(adv);
      std::vector<double> err;
      for (std::uint64_t s = 0; s < 5; ++s) {
        Rng rng(s);
        auto spec = ContaminationSpec::parse(adv);
        spec.direction_seed = s;
        const Vector beta = beta_of_norm(d, sigma * eps * std::log(1 / eps), s + 7);
        const auto inst = gen_regression_instance(d, 200000, eps, beta, sigma, spec, rng);
        Rng est(s + 300);
        err.push_back((robust_regression(inst, eps, 0.5, AlgorithmParams{}, est).beta_hat - beta).norm());
      }
      CHECK(median_of(err) <= 6 * sigma * eps);
    }
  }

  SUBCASE("starved intervals are reported") {
    Rng rng(6);
    const auto inst = gen_regression_instance(4, 2000, eps, Vector::Zero(4), sigma, none, rng);
    Rng est(1);
    CHECK_THROWS_AS(robust_regression(inst, eps, 0.5, AlgorithmParams{}, est), NumericalError);
  }
}

TEST_CASE("baseline regressor") {
  const int d = 32;
  SUBCASE("no trimming is ordinary least squares") {
    Rng rng(1);
    const auto inst = gen_regression_instance(8, 5000, 0.0, beta_of_norm(8, 1.0, 1), 1.0, ContaminationSpec{}, rng);
    const Matrix X = inst.xs;
    const Vector ols = X.colPivHouseholderQr().solve(inst.ys);
    CHECK((baseline_center_regressor(inst, 0.0, 3) - ols).norm() <= 1e-10);
  }
  SUBCASE("label flips") {
    const double eps = 0.05;
    int ok = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      Rng rng(s);
      auto spec = ContaminationSpec::parse("regression_label_flip");
      spec.direction_seed = s;
      const Vector beta = beta_of_norm(d, eps * std::log(1 / eps), s);
      const auto inst = gen_regression_instance(d, 100000, eps, beta, 1.0, spec, rng);
      if ((baseline_center_regressor(inst, eps) - beta).norm() <= eps * std::log(1 / eps) * 4.0) ++ok;
    }
    CHECK(ok >= 8);
  }
  SUBCASE("re-centering composes with the robust estimator for large coefficients") {
    const double eps = 0.05;
    std::vector<double> err;
    for (std::uint64_t s = 0; s < 5; ++s) {
      Rng rng(s);
      auto spec = ContaminationSpec::parse("regression_hinge");
      spec.direction_seed = s;
      const Vector beta = beta_of_norm(d, 1.0, s + 20);
      const auto inst = gen_regression_instance(d, 200000, eps, beta, 1.0, spec, rng);
      const Vector beta0 = baseline_center_regressor(inst, eps);
      Rng est(s);
      const auto rep = robust_regression(recenter(inst, beta0), eps, 0.5, AlgorithmParams{}, est);
      err.push_back((rep.beta_hat + beta0 - beta).norm());
    }
    CHECK(median_of(err) <= 8 * eps);
  }
  SUBCASE("rank-deficient designs are rejected") {
    RegressionInstance inst;
    inst.xs = RowMatrix::Zero(10, 2);
    inst.ys = Vector::Ones(10);
    CHECK_THROWS(baseline_center_regressor(inst, 0.0));
  }
}

TEST_CASE("baselines") {
  RowMatrix X(3, 2);
  X << 0, 0, 3, 3, 30, -6;
  const Dataset data(std::move(X));
  CHECK(sample_mean(data).isApprox((Vector(2) << 11, -1).finished()));
  CHECK(coordinate_median(data) == (Vector(2) << 3, 0).finished());

  Rng rng(2);
  auto spec = ContaminationSpec::parse("point_mass:3");
  const Dataset contaminated = gen_mean_instance(16, 50000, 0.1, Vector::Zero(16), spec, rng);
  FilterOutcome out;
  const Vector mu = single_direction_mean(contaminated, 0.1, AlgorithmParams{}, rng, &out);
  CHECK(mu.norm() < sample_mean(contaminated).norm());
  CHECK(out.rounds >= 1);
}
