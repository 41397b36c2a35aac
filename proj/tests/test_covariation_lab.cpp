#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gffhom/covariation_lab.hpp"
#include "gffhom/error.hpp"
#include "gffhom/evolution.hpp"

using namespace gffhom;

TEST_CASE("kind tags round-trip") {
  for (CovariationKind k : kAllCovariationKinds) CHECK(parse_covariation_kind(to_string(k)) == k);
  try {
    parse_covariation_kind("QV_NOPE");
    FAIL("expected UnknownKind");
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::UnknownKind);
  }
}

TEST_CASE("closed-form targets") {
  const double s = 1.0, lambda = lambda_closed_form(1.0, 0.1), L2 = std::exp(2.0);
  using K = CovariationKind;
  CHECK(covariation_target(K::QV_PSI, s, lambda) == std::vector<double>{1.0});
  // [d psi grad d phi] / ds = -J / (2 lambda) with J = [[0, -1], [1, 0]].
  const auto b = covariation_target(K::COV_PSI_GRADPHI, s, lambda);
  REQUIRE(b.size() == 4);
  CHECK(b[0] == 0.0);
  CHECK(b[1] == doctest::Approx(1.0 / (2 * lambda)));
  CHECK(b[2] == doctest::Approx(-1.0 / (2 * lambda)));
  CHECK(b[3] == 0.0);
  CHECK(covariation_target(K::QV_TR_GRADPHI, s, lambda)[0] == doctest::Approx(1 / (lambda * lambda)));
  CHECK(covariation_target(K::QV_SECOND_DERIVS, s, lambda)[0] ==
        doctest::Approx(1 / (lambda * lambda * L2)));
  CHECK(covariation_target(K::QV_GRADPSI, s, lambda)[0] == doctest::Approx(1 / L2));
  CHECK(covariation_target(K::QV_DSIGMA, s, lambda)[0] == doctest::Approx(L2));
  CHECK(covariation_target(K::QV_DPHI, s, lambda)[0] == doctest::Approx(L2 / (lambda * lambda)));
  const auto pd = covariation_target(K::QV_PARTIAL_DPHI, s, lambda);
  CHECK(pd == std::vector<double>{0.5 / (lambda * lambda), 0.0, 0.0, 0.5 / (lambda * lambda)});
  for (K k : {K::NULL_PSI_HESSPHI, K::NULL_GRADPHI_HESSPHI, K::NULL_GRADPHI_GRADPSI}) {
    CHECK(covariation_target(k, s, lambda) == std::vector<double>(8, 0.0));
  }
}

TEST_CASE("all identities at moderate sample size") {
  LabConfig lab;
  lab.workers = 1;
  for (double s : {0.0, 2.0}) {
    for (const auto& e : estimate_all(s, 0.1, 2000, 0.01, lab)) {
      CAPTURE(to_string(e.kind));
      CAPTURE(s);
      CHECK(e.n_samples == 2000);
      CHECK(e.z_score < 4.0);
    }
  }
}

TEST_CASE("gaussian amplitudes satisfy the identities too") {
  LabConfig lab;
  lab.sampler.gaussian_amplitudes = true;
  lab.seed = 77;
  for (const auto& e : estimate_all(1.0, 0.1, 2000, 0.01, lab)) {
    CAPTURE(to_string(e.kind));
    CHECK(e.z_score < 4.0);
  }
}

TEST_CASE("symmetric part of B vanishes and the partial-derivative rate is symmetric in (i, j)") {
  LabConfig lab;
  lab.seed = 5;
  const double s = 0.5, lambda = lambda_closed_form(s, 0.1);
  const auto est = estimate_functional(s, 0.1, 3000, 0.01, lab, [&](const DriverFields& df) {
    double sym_xy = 0.0, trace = 0.0, asym = 0.0;
    const std::size_t np = df.dpsi.points();
    for (std::size_t p = 0; p < np; ++p) {
      const Mat2 b = df.dpsi[p] * df.grad_dphi.get(p);
      sym_xy += 0.5 * (b.xy + b.yx);
      trace += b.xx + b.yy;
      asym += 0.5 * (b.xy - b.yx);
    }
    return std::vector<double>{sym_xy / np / 0.01, trace / np / 0.01, asym / np / 0.01};
  });
  CHECK(std::abs(est.mean[0]) < 4 * est.std_error[0]);
  CHECK(std::abs(est.mean[1]) < 1e-12);  // tr grad d phi = 0 pointwise
  CHECK(std::abs(est.mean[2] - 1.0 / (2 * lambda)) < 4 * est.std_error[2]);

  const auto pd = estimate(CovariationKind::QV_PARTIAL_DPHI, s, 0.1, 3000, 0.01, lab);
  REQUIRE(pd.components.size() == 4);
  CHECK(pd.components[1].value == doctest::Approx(pd.components[2].value).epsilon(1e-12));
}

TEST_CASE("a mis-scaled sampler is detected") {
  LabConfig lab;
  lab.sampler.amplitude_scale = 1.5;
  const auto e = estimate(CovariationKind::QV_PSI, 1.0, 0.1, 1000, 0.01, lab);
  CHECK(e.z_score > 10.0);
  CHECK(e.components[0].value == doctest::Approx(2.25).epsilon(0.01));
}

TEST_CASE("estimates are deterministic and independent of the worker count") {
  LabConfig one;
  one.workers = 1;
  LabConfig three = one;
  three.workers = 3;
  const auto a = estimate(CovariationKind::QV_DSIGMA, 1.0, 0.1, 300, 0.01, one);
  const auto b = estimate(CovariationKind::QV_DSIGMA, 1.0, 0.1, 300, 0.01, three);
  CHECK(a.components[0].value == b.components[0].value);
  CHECK(a.components[0].std_error == b.components[0].std_error);
}

TEST_CASE("too few samples") {
  try {
    estimate(CovariationKind::QV_PSI, 0.0, 0.1, 50, 0.01);
    FAIL("expected InsufficientSamples");
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::InsufficientSamples);
  }
}

TEST_CASE("identity CSV and table") {
  const IdentityReport rep = run_identity_suite({0.0}, 0.1, 200, 0.01);
  CHECK(rep.estimates.size() == 11);
  std::ostringstream csv;
  write_identity_csv(csv, rep);
  const std::string text = csv.str();
  CHECK(text.rfind("kind,s,component,value,stderr,target,z\n", 0) == 0);
  CHECK(text.find("COV_PSI_GRADPHI,0,12,") != std::string::npos);
  std::ostringstream table;
  write_identity_table(table, rep);
  CHECK(table.str().find("QV_PARTIAL_DPHI") != std::string::npos);
}

TEST_CASE("lattice-shell sampler in the lab") {
  LabConfig lab;
  lab.sampler.kind = SamplerKind::LatticeShell;
  lab.sampler.box_length = required_lattice_box(1.0, 0.01) * 4.0;
  if (lattice_shell_count(1.0, 0.01, lab.sampler.box_length) == 0) {
    lab.sampler.box_length = required_lattice_box(1.0, 0.01);
  }
  const auto e = estimate(CovariationKind::QV_PSI, 1.0, 0.1, 400, 0.01, lab);
  CHECK(e.z_score < 4.0);
}
