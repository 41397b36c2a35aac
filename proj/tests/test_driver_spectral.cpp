#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include "gffhom/driver_spectral.hpp"
#include "gffhom/error.hpp"
#include "gffhom/evolution.hpp"

using namespace gffhom;

namespace {

constexpr double kPi = std::numbers::pi;

DriverIncrement single_mode(double s, double angle, double amplitude, double phase, double lambda) {
  DriverIncrement inc;
  inc.s_start = s;
  inc.ds = 0.01;
  inc.lambda_at_start = lambda;
  const double r = std::exp(-s);
  inc.modes.push_back({{r * std::cos(angle), r * std::sin(angle)}, amplitude, phase});
  return inc;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const SimError& e) {
    return e.code();
  }
  FAIL("no SimError thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("plane-wave increments lie on the shell with equal amplitudes") {
  Rng rng(1);
  SamplerConfig sc;
  const double s = 1.3, ds = 0.01;
  const auto inc = sample_increment(s, ds, 1.2, sc, rng);
  REQUIRE(inc.modes.size() == 64);
  double energy = 0.0;
  for (const auto& m : inc.modes) {
    CHECK(std::sqrt(norm2(m.k)) == doctest::Approx(std::exp(-s)).epsilon(1e-14));
    CHECK(m.phase >= 0.0);
    CHECK(m.phase < 2 * kPi);
    energy += 0.5 * m.amplitude * m.amplitude;
  }
  // Pointwise variance sum A^2 / 2 equals ds.
  CHECK(energy == doctest::Approx(ds).epsilon(1e-12));
}

TEST_CASE("gaussian amplitudes carry ds of variance on average") {
  Rng rng(2);
  SamplerConfig sc;
  sc.gaussian_amplitudes = true;
  sc.n_modes = 16;
  double energy = 0.0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    for (const auto& m : sample_increment(0.0, 0.02, 1.0, sc, rng).modes) {
      energy += 0.5 * m.amplitude * m.amplitude;
    }
  }
  // Each increment's energy is ds/16 * chi^2_32 / 2: relative sd 1/4 per increment.
  CHECK(energy / trials == doctest::Approx(0.02).epsilon(0.02));
}

TEST_CASE("directions are isotropic") {
  Rng rng(3);
  SamplerConfig sc;
  constexpr int kBins = 16;
  int counts[kBins] = {};
  int total = 0;
  for (int t = 0; t < 200; ++t) {
    for (const auto& m : sample_increment(0.5, 0.01, 1.0, sc, rng).modes) {
      double a = std::atan2(m.k.y, m.k.x);
      if (a < 0) a += 2 * kPi;
      ++counts[std::min(kBins - 1, static_cast<int>(a / (2 * kPi) * kBins))];
      ++total;
    }
  }
  const double expected = static_cast<double>(total) / kBins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99th percentile of chi^2 with 15 degrees of freedom.
  CHECK(chi2 < 30.58);
}

TEST_CASE("point variance of d psi is ds") {
  Rng rng(4);
  SamplerConfig sc;
  const GridSpec grid{4, 1.0};
  double sum = 0.0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const auto df = evaluate_drivers(sample_increment(0.0, 0.01, 1.0, sc, rng), grid);
    sum += df.dpsi[0] * df.dpsi[0];
  }
  // Relative sd of the estimate is about sqrt(2 / trials) = 1%.
  CHECK(sum / trials == doctest::Approx(0.01).epsilon(0.04));
}

TEST_CASE("sampler errors") {
  Rng rng(5);
  SamplerConfig sc;
  CHECK(code_of([&] { sample_increment(0.0, 0.0, 1.0, sc, rng); }) == ErrorCode::NonpositiveStep);
  CHECK(code_of([&] { sample_increment(0.0, -0.1, 1.0, sc, rng); }) == ErrorCode::NonpositiveStep);
  CHECK(code_of([&] { sample_increment(0.0, 0.01, 0.5, sc, rng); }) == ErrorCode::InvalidArgument);
  sc.n_modes = 0;
  CHECK(code_of([&] { sample_increment(0.0, 0.01, 1.0, sc, rng); }) == ErrorCode::InvalidArgument);

  SamplerConfig lattice;
  lattice.kind = SamplerKind::LatticeShell;
  // dk = 1: at s = 0 the annulus [e^{-0.01}, 1] holds the pairs of (1, 0) and (0, 1) only.
  lattice.box_length = 2 * kPi;
  CHECK(sample_increment(0.0, 0.01, 1.0, lattice, rng).modes.size() == 2);
  try {
    sample_increment(0.5, 0.01, 1.0, lattice, rng);
    FAIL("expected EmptyShell");
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::EmptyShell);
    CHECK(std::string(e.what()).find("box_length >=") != std::string::npos);
  }
}

TEST_CASE("lattice shell holds one representative per +-k pair inside the annulus") {
  const double s = 0.7, ds = 0.01;
  const double box = required_lattice_box(s, ds) * 3.0;
  SamplerConfig lattice;
  lattice.kind = SamplerKind::LatticeShell;
  lattice.box_length = box;
  Rng rng(6);
  const auto inc = sample_increment(s, ds, 1.0, lattice, rng);
  REQUIRE(!inc.modes.empty());
  CHECK(static_cast<int>(inc.modes.size()) == lattice_shell_count(s, ds, box));
  const double dk = 2 * kPi / box;
  std::set<std::pair<long, long>> seen;
  for (const auto& m : inc.modes) {
    const double r = std::sqrt(norm2(m.k));
    CHECK(r >= std::exp(-(s + ds)));
    CHECK(r <= std::exp(-s));
    const long m1 = std::lround(m.k.x / dk), m2 = std::lround(m.k.y / dk);
    CHECK(seen.count({-m1, -m2}) == 0);
    seen.insert({m1, m2});
  }
  CHECK(seen.size() == inc.modes.size());

  // Brute-force count over the full square.
  int brute = 0;
  const int mm = static_cast<int>(std::exp(-s) / dk) + 2;
  for (int a = -mm; a <= mm; ++a) {
    for (int b = -mm; b <= mm; ++b) {
      const double r = dk * std::hypot(a, b);
      if (r >= std::exp(-(s + ds)) && r <= std::exp(-s)) ++brute;
    }
  }
  CHECK(2 * lattice_shell_count(s, ds, box) == brute);
}

TEST_CASE("required lattice box yields a nonempty annulus") {
  for (double s : {0.0, 1.0, 2.5}) {
    const double box = required_lattice_box(s, 0.01);
    CHECK(box >= 2 * kPi * std::exp(s));
    CHECK(lattice_shell_count(s, 0.01, box) > 0);
  }
}

TEST_CASE("single plane wave matches its closed form and finite differences") {
  const double s = 0.4, lambda = 1.3, amp = 0.7, phase = 0.9, angle = 0.6;
  const auto inc = single_mode(s, angle, amp, phase, lambda);
  const double kappa = std::exp(-s);
  const Vec2 k = inc.modes[0].k;
  // A quarter wavelength across the box keeps the stencil error near 1e-4.
  const GridSpec grid{64, 0.25 * 2 * kPi / kappa};
  const auto df = evaluate_drivers(inc, grid);
  const double h = grid.spacing();
  const int n = grid.n;
  auto idx = [n](int a, int b) { return static_cast<std::size_t>(b) * n + a; };

  double worst_value = 0.0, worst_fd = 0.0;
  for (int b = 1; b < n - 1; b += 7) {
    for (int a = 1; a < n - 1; a += 5) {
      const std::size_t p = idx(a, b);
      const Vec2 x{grid.coord(a), grid.coord(b)};
      worst_value = std::max(worst_value, std::abs(df.dpsi[p] - amp * std::cos(dot(k, x) + phase)));

      const std::size_t pxp = idx(a + 1, b), pxm = idx(a - 1, b);
      const std::size_t pyp = idx(a, b + 1), pym = idx(a, b - 1);
      auto d = [&](const auto& field, std::size_t plus, std::size_t minus) {
        return (1.0 / (2 * h)) * (field.get(plus) - field.get(minus));
      };
      const Vec2 gpsi{(df.dpsi[pxp] - df.dpsi[pxm]) / (2 * h), (df.dpsi[pyp] - df.dpsi[pym]) / (2 * h)};
      worst_fd = std::max(worst_fd, std::sqrt(norm2(gpsi - df.grad_dpsi.get(p))) / (amp * kappa));

      // Row j of grad X is d_j X.
      const Vec2 dphi_x = d(df.dphi, pxp, pxm), dphi_y = d(df.dphi, pyp, pym);
      const Mat2 gphi{dphi_x.x, dphi_x.y, dphi_y.x, dphi_y.y};
      worst_fd = std::max(worst_fd, std::sqrt(frobenius2(gphi - df.grad_dphi.get(p))) * lambda / amp);

      const Vec2 dsig_x = d(df.dsigma, pxp, pxm), dsig_y = d(df.dsigma, pyp, pym);
      const Mat2 gsig{dsig_x.x, dsig_x.y, dsig_y.x, dsig_y.y};
      worst_fd = std::max(worst_fd, std::sqrt(frobenius2(gsig - df.grad_dsigma.get(p))) / amp);

      const Mat2 h0 = d(df.grad_dphi, pxp, pxm);
      const Mat2 h1 = d(df.grad_dphi, pyp, pym);
      worst_fd = std::max(worst_fd, std::sqrt(frobenius2(h0 - df.grad_partial_dphi.get(p, 0))) *
                                        lambda / (amp * kappa));
      worst_fd = std::max(worst_fd, std::sqrt(frobenius2(h1 - df.grad_partial_dphi.get(p, 1))) *
                                        lambda / (amp * kappa));
    }
  }
  CHECK(worst_value < 1e-13);
  CHECK(worst_fd < 1e-3);
  CHECK(verify_pointwise_relations(df, lambda) < 1e-13);
}

TEST_CASE("helmholtz relations hold to rounding for every sampler") {
  Rng rng(7);
  const GridSpec grid{32, 50.0};
  for (double s : {0.0, 1.0, 3.0}) {
    const double lambda = lambda_closed_form(s, 0.1);
    SamplerConfig pw;
    SamplerConfig gauss;
    gauss.gaussian_amplitudes = true;
    SamplerConfig lattice;
    lattice.kind = SamplerKind::LatticeShell;
    lattice.box_length = required_lattice_box(s, 0.01) * 2.0;
    if (lattice_shell_count(s, 0.01, lattice.box_length) == 0) {
      lattice.box_length = required_lattice_box(s, 0.01);
    }
    for (const auto* sc : {&pw, &gauss, &lattice}) {
      const auto df = evaluate_drivers(sample_increment(s, 0.01, lambda, *sc, rng), grid);
      CHECK(verify_pointwise_relations(df, lambda) <= 1e-10);
    }
  }
}

TEST_CASE("evaluation errors") {
  const auto inc = single_mode(0.0, 0.0, 1.0, 0.0, 1.0);
  CHECK(code_of([&] { evaluate_drivers(inc, GridSpec{3, 1.0}); }) == ErrorCode::GridMismatch);
  CHECK(code_of([&] { evaluate_drivers(inc, GridSpec{8, 0.0}); }) == ErrorCode::GridMismatch);
  DriverIncrement zero = inc;
  zero.modes[0].k = {0.0, 0.0};
  CHECK(code_of([&] { evaluate_drivers(zero, GridSpec{8, 1.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("evaluate_drivers_into reuses and resizes storage") {
  Rng rng(8);
  SamplerConfig sc;
  const auto inc = sample_increment(0.2, 0.01, 1.0, sc, rng);
  DriverFields out(GridSpec{8, 3.0});
  evaluate_drivers_into(inc, GridSpec{16, 5.0}, out);
  CHECK(out.spec() == GridSpec{16, 5.0});
  const auto fresh = evaluate_drivers(inc, GridSpec{16, 5.0});
  for (std::size_t p = 0; p < fresh.dpsi.points(); ++p) CHECK(out.dpsi[p] == fresh.dpsi[p]);
}
