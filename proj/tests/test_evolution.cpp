#include <doctest.h>

#include <cmath>
#include <limits>

#include "gffhom/error.hpp"
#include "gffhom/evolution.hpp"

using namespace gffhom;

namespace {

const GridSpec kGrid{16, 40.0};

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const SimError& e) {
    return e.code();
  }
  FAIL("no SimError thrown");
  return ErrorCode::InvalidArgument;
}

double max_diff(const Mat2& a, const Mat2& b) { return std::sqrt(frobenius2(a - b)); }

}  // namespace

TEST_CASE("lambda closed form") {
  CHECK(lambda_closed_form(0.0, 0.1) == 1.0);
  CHECK(lambda_closed_form(1.0, 0.1) == doctest::Approx(std::sqrt(1.01)).epsilon(1e-15));
  CHECK(lambda_closed_form(3.0, 0.3) == doctest::Approx(std::sqrt(1.27)).epsilon(1e-15));
  CHECK(code_of([] { lambda_closed_form(-0.1, 0.1); }) == ErrorCode::NegativeTime);
}

TEST_CASE("initial state is zero with vanishing residuum") {
  const ScaleState st = ScaleState::initial(kGrid, 0.1);
  CHECK(st.lambda == 1.0);
  const StepSummary sum = summarize(st);
  CHECK(sum.space_avg_psi2 == 0.0);
  CHECK(sum.space_avg_phi2 == 0.0);
  CHECK(sum.space_avg_f2 == 0.0);
  CHECK(sum.space_avg_r2 == 0.0);
  const EndoGrid a = coefficient_field(st);
  CHECK(max_diff(a.get(5), Mat2::identity()) == 0.0);
}

TEST_CASE("first step from s = 0") {
  const double eps = 0.1, ds = 0.01;
  Rng rng(11);
  const auto inc = sample_increment(0.0, ds, 1.0, SamplerConfig{}, rng);
  const DriverFields df = evaluate_drivers(inc, kGrid);
  const ScaleState st = step(ScaleState::initial(kGrid, eps), inc);

  CHECK(st.s == doctest::Approx(ds));
  CHECK(st.lambda == doctest::Approx(std::sqrt(1.0 + eps * eps * ds)).epsilon(1e-15));
  const EndoGrid r = residuum(st);
  const Mat2 jrot = Mat2::rotation_j();
  double worst = 0.0;
  for (std::size_t p = 0; p < st.psi.points(); ++p) {
    CHECK(st.psi[p] == df.dpsi[p]);
    CHECK(std::sqrt(norm2(st.phi_tilde.get(p) - eps * df.dphi.get(p))) < 1e-16);
    CHECK(std::sqrt(norm2(st.sigma_tilde.get(p) - eps * df.dsigma.get(p))) < 1e-16);
    CHECK(frobenius2(st.f.get(p)) == 0.0);
    // With lambda(0) = 1 the Helmholtz relation cancels the O(eps) terms:
    // r = (1 - lambda_1) id + eps^2 d psi J grad d phi.
    const Mat2 expected = (1.0 - st.lambda) * Mat2::identity() +
                          (eps * eps * df.dpsi[p]) * (jrot * df.grad_dphi.get(p));
    worst = std::max(worst, max_diff(r.get(p), expected));
  }
  CHECK(worst < 1e-15);
}

TEST_CASE("first-step residuum is O(ds)") {
  const double eps = 0.2;
  double prev = 0.0;
  for (double ds : {0.02, 0.01, 0.005}) {
    Rng rng(12);
    double r2 = 0.0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
      const auto inc = sample_increment(0.0, ds, 1.0, SamplerConfig{}, rng);
      r2 += summarize(step(ScaleState::initial(kGrid, eps), inc)).space_avg_r2;
    }
    r2 /= trials;
    CHECK(std::sqrt(r2) < 2.0 * eps * eps * ds);
    if (prev > 0.0) {
      CHECK(prev / r2 > 3.0);
      CHECK(prev / r2 < 5.3);
    }
    prev = r2;
  }
}

TEST_CASE("sigma drift adds eps^2 ds / (2 lambda) J phi~") {
  const double eps = 0.3, ds = 0.01;
  Rng rng(13);
  const auto inc0 = sample_increment(0.0, ds, 1.0, SamplerConfig{}, rng);
  const ScaleState s1 = step(ScaleState::initial(kGrid, eps), inc0);
  const auto inc1 = sample_increment(s1.s, ds, s1.lambda, SamplerConfig{}, rng);
  const ScaleState with = step(s1, inc1);
  const ScaleState without = step(s1, inc1, StepOptions{false});
  const double drift = ds * eps * eps / (2.0 * s1.lambda);
  for (std::size_t p = 0; p < with.psi.points(); p += 17) {
    CHECK(norm2(with.phi_tilde.get(p) - without.phi_tilde.get(p)) == 0.0);
    const Vec2 diff = with.sigma_tilde.get(p) - without.sigma_tilde.get(p);
    CHECK(std::sqrt(norm2(diff - drift * rotate_j(s1.phi_tilde.get(p)))) < 1e-17);
  }
}

TEST_CASE("step errors") {
  Rng rng(14);
  const ScaleState st = ScaleState::initial(kGrid, 0.1);
  const auto late = sample_increment(0.5, 0.01, lambda_closed_form(0.5, 0.1), SamplerConfig{}, rng);
  CHECK(code_of([&] { step(st, late); }) == ErrorCode::MismatchedIncrement);
  const auto wrong_lambda = sample_increment(0.0, 0.01, 1.5, SamplerConfig{}, rng);
  CHECK(code_of([&] { step(st, wrong_lambda); }) == ErrorCode::MismatchedIncrement);

  const auto inc = sample_increment(0.0, 0.01, 1.0, SamplerConfig{}, rng);
  const DriverFields other = evaluate_drivers(inc, GridSpec{8, 40.0});
  CHECK(code_of([&] { step(st, inc, other); }) == ErrorCode::GridMismatch);

  ScaleState bad = st;
  bad.psi[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { step(bad, inc); }) == ErrorCode::NonfiniteField);

  const ScaleState plain = ScaleState::initial(kGrid, 0.1, false);
  CHECK(code_of([&] { residuum(plain); }) == ErrorCode::GradientUnavailable);
  const ScaleState stepped = step(plain, inc);
  CHECK(summarize(stepped).space_avg_r2 == 0.0);
  CHECK(summarize(stepped).space_avg_phi2 > 0.0);
}

TEST_CASE("run_path output schedule and determinism") {
  PathConfig pc;
  pc.s_max = 0.5;
  pc.ds = 0.01;
  pc.output_every = 0.1;
  pc.grid = GridSpec{16, 2 * 3.14159 * std::exp(0.5)};
  CHECK(pc.step_count() == 50);
  CHECK(pc.output_stride() == 10);

  const PathResult a = run_path(pc, 5);
  const PathResult b = run_path(pc, 5);
  const PathResult c = run_path(pc, 6);
  REQUIRE(a.summaries.size() == 6);
  for (std::size_t i = 0; i < a.summaries.size(); ++i) {
    CHECK(a.summaries[i].s_end == doctest::Approx(0.1 * i).epsilon(1e-12));
    CHECK(a.summaries[i].lambda == lambda_closed_form(a.summaries[i].s_end, pc.epsilon));
    CHECK(a.summaries[i].space_avg_phi2 == b.summaries[i].space_avg_phi2);
    CHECK(a.summaries[i].space_avg_r2 == b.summaries[i].space_avg_r2);
  }
  CHECK(a.summaries.back().space_avg_psi2 != c.summaries.back().space_avg_psi2);
  CHECK(a.max_lambda_defect < 1e-12);
}

TEST_CASE("run_path config errors") {
  PathConfig pc;
  pc.grid = GridSpec{16, 10.0};
  pc.s_max = 0.105;
  CHECK(code_of([&] { pc.step_count(); }) == ErrorCode::ConfigError);
  pc.s_max = 0.1;
  pc.output_every = 0.015;
  CHECK(code_of([&] { pc.output_stride(); }) == ErrorCode::ConfigError);
  pc.ds = 0.0;
  CHECK(code_of([&] { pc.step_count(); }) == ErrorCode::NonpositiveStep);
}

TEST_CASE("s_max = 0 yields the initial summary only") {
  PathConfig pc;
  pc.s_max = 0.0;
  pc.grid = GridSpec{16, 10.0};
  const PathResult r = run_path(pc, 1);
  REQUIRE(r.summaries.size() == 1);
  CHECK(r.summaries[0].lambda == 1.0);
  CHECK(r.summaries[0].space_avg_psi2 == 0.0);
}
