#include <doctest.h>

#include <cmath>

#include "huberfilt/audit.hpp"
#include "huberfilt/datagen.hpp"
#include "huberfilt/filter.hpp"
#include "huberfilt/stage1.hpp"
#include "oracles.hpp"

using namespace huberfilt;

namespace {

ResolvedParams params_for(Eigen::Index n, Eigen::Index d, double eps, const std::string& overrides = "") {
  AlgorithmParams p;
  p.eps = eps;
  p.apply_overrides(overrides);
  return resolve(p, n, d);
}

// Structural invariants every trace must satisfy.
void check_trace(const Stage1Output& out, const ResolvedParams& p) {
  CHECK(static_cast<int>(out.trace.size()) <= p.t_max);
  CHECK(static_cast<int>(out.basis.size()) <= p.t_max);
  int dim = 0;
  for (const auto& r : out.trace) {
    const bool grows = r.kind == IterationCase::grow || r.kind == IterationCase::fallback_grow;
    if (grows) ++dim;
    CHECK(r.dim_V == dim);
    if (r.kind == IterationCase::filter) CHECK(r.filter_stop.has_value());
    if (r.kind != IterationCase::terminate) CHECK(r.q_hat.has_value());
  }
  const auto [cross, norm] = out.basis.orthonormality_defect();
  CHECK(cross < 1e-9);
  CHECK(norm < 1e-12);
}

}  // namespace

TEST_CASE("clean data terminates at the first iteration") {
  Rng rng(1);
  const Dataset data(rng.normal_matrix(50000, 64));
  const auto p = params_for(data.n(), data.d(), 0.05);
  const auto out = run_stage1(data, 0.05, p, rng, nullptr);
  REQUIRE(out.trace.size() == 1);
  CHECK(out.trace[0].kind == IterationCase::terminate);
  CHECK(out.stop == Stage1Stop::terminated);
  CHECK(out.basis.size() == 0);
  CHECK((out.mu_full - data.points().colwise().mean().transpose()).norm() < 1e-12);
  check_trace(out, p);
}

TEST_CASE("rank-one corruption is set aside or filtered") {
  const double eps = 0.05;
  const int d = 32;
  for (std::uint64_t s = 0; s < 10; ++s) {
    CAPTURE(s);
    Rng rng(s);
    ContaminationSpec spec = ContaminationSpec::parse("point_mass:3");
    spec.direction_seed = s;
    const Vector mu = Vector::Zero(d);
    const Dataset data = gen_mean_instance(d, 40000, eps, mu, spec, rng);
    const auto p = params_for(data.n(), d, eps);
    Rng warm_rng = rng.split(1), stage_rng = rng.split(2);
    const auto warm = warm_start(data, eps, p, warm_rng);
    const auto out = run_stage1(data, eps, p, stage_rng, &warm.w_after);
    check_trace(out, p);
    CHECK(out.stop == Stage1Stop::terminated);
    CHECK(out.basis.size() <= 3);
    CHECK(out.basis.project_complement(Vector(out.mu_full - mu)).norm() <= 4 * eps);
    // Weights never increase.
    CHECK((out.w.array() <= warm.w_after.array()).all());
    // Certificate on termination.
    const auto cert = audit_certificate(data, out.w, out.basis, mu, eps);
    CHECK(cert.pass);
  }
}

TEST_CASE("subspace spread: stage 1 reaches the target error on the complement") {
  const double eps = 0.05;
  const int d = 64;
  const double m = 2.0 * std::sqrt(std::log(1 / eps));
  for (std::uint64_t s = 0; s < 3; ++s) {
    Rng rng(s);
    ContaminationSpec spec = ContaminationSpec::parse("subspace_spread:" + std::to_string(m) + ":8");
    spec.direction_seed = s;
    const Vector mu = Vector::Zero(d);
    const Dataset data = gen_mean_instance(d, 60000, eps, mu, spec, rng);
    const auto p = params_for(data.n(), d, eps);
    Rng warm_rng = rng.split(1), stage_rng = rng.split(2);
    const auto warm = warm_start(data, eps, p, warm_rng);
    const auto out = run_stage1(data, eps, p, stage_rng, &warm.w_after);
    check_trace(out, p);
    CHECK(out.basis.project_complement(Vector(out.mu_full - mu)).norm() <= 4 * eps);
  }
}

TEST_CASE("balanced high-rank spread triggers the multi-directional filter") {
  // Outliers at ±M along every one of d orthonormal directions, the same
  // count per direction, so B⊥'s large eigenvalues are all equal and random
  // sketch pairs are nearly orthogonal. A 3-row sketch then certifies and
  // the filter removes the far points.
  const int d = 512, per = 4;
  const long n = 20000;
  const double eps = 0.1, M = 300.0;
  Rng rng(0);
  RowMatrix X = rng.normal_matrix(n, d);
  std::vector<std::uint8_t> labels(n, 1);
  const Matrix V = adversary_directions(d, d, 0);
  long i = 0;
  for (int j = 0; j < d; ++j)
    for (int c = 0; c < per; ++c, ++i) {
      X.row(i) = (c % 2 ? -M : M) * V.col(j).transpose();
      labels[static_cast<std::size_t>(i)] = 0;
    }
  const Dataset data(std::move(X), std::move(labels));
  const auto p = params_for(n, d, eps, "k_sketch=3,t_max=2,p=2,qt_pairs=512");
  const auto out = run_stage1(data, eps, p, rng, nullptr);
  check_trace(out, p);
  int filters = 0;
  for (const auto& r : out.trace) {
    if (r.kind != IterationCase::filter) continue;
    ++filters;
    CHECK(*r.q_hat <= 1.0 / (9.0 * p.t_max));
    CHECK(*r.phi_hat_after < *r.phi_hat_before);
    CHECK(*r.inlier_mass_removed <= 1e-3 * n);
    CHECK(*r.outlier_mass_removed > 500.0);
  }
  CHECK(filters >= 1);
}

TEST_CASE("growth removes the witness energy from the potential") {
  // A single far point mass makes B⊥ essentially rank one: Case 2 fires and
  // the paired potential estimate drops by at least half the witness energy.
  const int d = 32;
  int grows = 0, ok = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(s);
    ContaminationSpec spec = ContaminationSpec::parse("point_mass:3");
    spec.direction_seed = s;
    const Dataset data = gen_mean_instance(d, 40000, 0.05, Vector::Zero(d), spec, rng);
    const auto p = params_for(data.n(), d, 0.05);
    const auto out = run_stage1(data, 0.05, p, rng, nullptr);
    for (const auto& r : out.trace)
      if (r.kind == IterationCase::grow) {
        ++grows;
        if (*r.phi_hat_after <= *r.phi_hat_before - 0.5 * *r.direction_energy) ++ok;
      }
  }
  REQUIRE(grows > 0);
  CHECK(ok >= 0.9 * grows);
}

TEST_CASE("stage 1 is deterministic for a fixed stream") {
  Rng gen(5);
  const Dataset data = gen_mean_instance(16, 8000, 0.1, Vector::Zero(16), ContaminationSpec::parse("cluster:4"), gen);
  const auto p = params_for(data.n(), 16, 0.1);
  Rng a(9), b(9);
  const auto x = run_stage1(data, 0.1, p, a, nullptr);
  const auto y = run_stage1(data, 0.1, p, b, nullptr);
  CHECK(x.w == y.w);
  CHECK(x.mu_full == y.mu_full);
  CHECK(x.trace.size() == y.trace.size());
}
