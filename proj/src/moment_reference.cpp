#include "gffhom/moment_reference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>

// pchip.hpp in Boost 1.74 relies on boost::math::isnan being declared first.
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

#include "gffhom/error.hpp"
#include "gffhom/format.hpp"

namespace gffhom {

namespace {

constexpr double kQuadTol = 1e-10;

double lam2(double eps, double s) { return 1.0 + eps * eps * s; }

void validate(double epsilon, std::span<const double> s_grid) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw SimError(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
  }
  if (s_grid.empty() || s_grid.front() != 0.0) {
    throw SimError(ErrorCode::InvalidArgument, "s grid must start at 0");
  }
  for (std::size_t i = 1; i < s_grid.size(); ++i) {
    if (!(s_grid[i] > s_grid[i - 1])) {
      throw SimError(ErrorCode::InvalidArgument, "s grid must be increasing");
    }
  }
}

void require_input(const MomentCurve& c, double epsilon, std::span<const double> s_grid) {
  if (c.epsilon != epsilon) {
    throw SimError(ErrorCode::InvalidArgument,
                   std::string("input curve ") + to_string(c.kind) + " has a different epsilon");
  }
  if (!std::equal(c.s_grid.begin(), c.s_grid.end(), s_grid.begin(), s_grid.end())) {
    throw SimError(ErrorCode::GridMismatch,
                   std::string("input curve ") + to_string(c.kind) + " is on a different s grid");
  }
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 20, kQuadTol, &err);
  if (!std::isfinite(v) || err > 1e-8 * std::abs(v) + 1e-300) {
    throw SimError(ErrorCode::QuadratureFailure,
                   "interval [" + format_number(a) + ", " + format_number(b) + "]");
  }
  return v;
}

// value(s) = F(s) int_0^s g(u) / F(u) du, cumulatively over the grid.
MomentCurve integrating_factor_solution(MomentKind kind, double epsilon,
                                        std::span<const double> s_grid,
                                        const std::function<double(double)>& factor,
                                        const std::function<double(double)>& source) {
  MomentCurve out{kind, epsilon, {s_grid.begin(), s_grid.end()}, {}};
  out.values.reserve(s_grid.size());
  out.values.push_back(0.0);
  double acc = 0.0;
  for (std::size_t i = 1; i < s_grid.size(); ++i) {
    acc += integrate([&](double u) { return source(u) / factor(u); }, s_grid[i - 1], s_grid[i]);
    out.values.push_back(factor(s_grid[i]) * acc);
  }
  return out;
}

// Smooth evaluation of an input curve between grid points.
std::function<double(double)> interpolant(const MomentCurve& c) {
  if (c.s_grid.size() < 4) {
    return [&c](double s) { return c.at(s); };
  }
  auto x = c.s_grid;
  auto y = c.values;
  auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
      std::move(x), std::move(y));
  return [spline](double s) { return std::max(0.0, (*spline)(s)); };
}

}  // namespace

const char* to_string(MomentKind kind) {
  switch (kind) {
    case MomentKind::PHI2_EXACT: return "PHI2_EXACT";
    case MomentKind::SIGMA2_BOUND: return "SIGMA2_BOUND";
    case MomentKind::PHI4_BOUND: return "PHI4_BOUND";
    case MomentKind::F2_BOUND: return "F2_BOUND";
  }
  return "UNKNOWN";
}

double MomentCurve::at(double s) const {
  if (s_grid.empty() || s < s_grid.front() - 1e-12 || s > s_grid.back() + 1e-12) {
    throw SimError(ErrorCode::GridMismatch, "s = " + format_number(s) + " outside curve grid");
  }
  const auto it = std::upper_bound(s_grid.begin(), s_grid.end(), s);
  if (it == s_grid.begin()) return values.front();
  if (it == s_grid.end()) return values.back();
  const std::size_t i = static_cast<std::size_t>(it - s_grid.begin());
  const double t = (s - s_grid[i - 1]) / (s_grid[i] - s_grid[i - 1]);
  return (1.0 - t) * values[i - 1] + t * values[i];
}

std::vector<double> uniform_s_grid(double s_max, double h) {
  if (!(h > 0.0) || s_max < 0.0) throw SimError(ErrorCode::InvalidArgument, "bad grid spacing");
  const int n = static_cast<int>(std::llround(s_max / h));
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(std::min(s_max, i * h));
  if (g.back() < s_max - 1e-12) g.push_back(s_max);
  return g;
}

MomentCurve phi2_exact(double epsilon, std::span<const double> s_grid) {
  validate(epsilon, s_grid);
  const double e2 = epsilon * epsilon;
  return integrating_factor_solution(
      MomentKind::PHI2_EXACT, epsilon, s_grid,
      [=](double s) { return std::sqrt(lam2(epsilon, s)); },
      [=](double u) { return e2 * std::exp(2.0 * u) / lam2(epsilon, u); });
}

MomentCurve phi2_rk4(double epsilon, std::span<const double> s_grid, double h) {
  validate(epsilon, s_grid);
  using State = std::array<double, 1>;
  const double e2 = epsilon * epsilon;
  auto rhs = [=](const State& a, State& dadt, double s) {
    const double l2 = lam2(epsilon, s);
    dadt[0] = e2 * a[0] / (2.0 * l2) + e2 * std::exp(2.0 * s) / l2;
  };
  boost::numeric::odeint::runge_kutta4<State> stepper;
  MomentCurve out{MomentKind::PHI2_EXACT, epsilon, {s_grid.begin(), s_grid.end()}, {0.0}};
  State a{0.0};
  for (std::size_t i = 1; i < s_grid.size(); ++i) {
    const double span = s_grid[i] - s_grid[i - 1];
    const int sub = std::max(1, static_cast<int>(std::ceil(span / h)));
    const double dt = span / sub;
    for (int k = 0; k < sub; ++k) stepper.do_step(rhs, a, s_grid[i - 1] + k * dt, dt);
    out.values.push_back(a[0]);
  }
  return out;
}

MomentCurve sigma2_bound(double epsilon, std::span<const double> s_grid, const MomentCurve& phi2) {
  validate(epsilon, s_grid);
  require_input(phi2, epsilon, s_grid);
  const double e2 = epsilon * epsilon;
  const auto a = interpolant(phi2);
  return integrating_factor_solution(
      MomentKind::SIGMA2_BOUND, epsilon, s_grid, [=](double s) { return lam2(epsilon, s); },
      [&](double u) { return e2 * (std::exp(2.0 * u) + 3.0 * a(u)); });
}

MomentCurve sigma2_proof_shape(double epsilon, std::span<const double> s_grid) {
  validate(epsilon, s_grid);
  const double e2 = epsilon * epsilon;
  return integrating_factor_solution(
      MomentKind::SIGMA2_BOUND, epsilon, s_grid, [=](double s) { return lam2(epsilon, s); },
      [=](double u) { return e2 * std::exp(2.0 * u); });
}

MomentCurve phi4_bound(double epsilon, std::span<const double> s_grid, const MomentCurve& phi2) {
  validate(epsilon, s_grid);
  require_input(phi2, epsilon, s_grid);
  const double e2 = epsilon * epsilon;
  const auto a = interpolant(phi2);
  return integrating_factor_solution(
      MomentKind::PHI4_BOUND, epsilon, s_grid,
      [=](double s) { return std::pow(lam2(epsilon, s), 5); },
      [&](double u) { return 4.0 * e2 * a(u) * std::exp(2.0 * u) / lam2(epsilon, u); });
}

MomentCurve f2_bound(double epsilon, std::span<const double> s_grid, const MomentCurve& phi2,
                     const MomentCurve& sigma2, const MomentCurve& phi4) {
  validate(epsilon, s_grid);
  require_input(phi2, epsilon, s_grid);
  require_input(sigma2, epsilon, s_grid);
  require_input(phi4, epsilon, s_grid);
  const double e2 = epsilon * epsilon;
  const auto a = interpolant(phi2);
  const auto b = interpolant(sigma2);
  const auto m = interpolant(phi4);
  return integrating_factor_solution(
      MomentKind::F2_BOUND, epsilon, s_grid,
      [=](double s) { return std::sqrt(lam2(epsilon, s)); },
      [&](double u) {
        const double inv_l2 = std::exp(-2.0 * u);
        const double mixed = a(u) + 2.0 * std::sqrt(3.0) * e2 * u * std::sqrt(m(u)) + 2.0 * b(u);
        return e2 * mixed * inv_l2 / lam2(epsilon, u) + 2.0 * e2 * a(u) * inv_l2;
      });
}

double f2_simplified_envelope(double epsilon, double s) {
  return 2.0 * epsilon * epsilon * (std::sqrt(lam2(epsilon, s)) - 1.0);
}

double moment_shape(MomentKind kind, double epsilon, double s) {
  const double e2 = epsilon * epsilon;
  const double l2 = std::exp(2.0 * s);
  const double x = lam2(epsilon, s);
  switch (kind) {
    case MomentKind::PHI2_EXACT: return e2 * l2 / x;
    case MomentKind::SIGMA2_BOUND: return e2 * l2;
    case MomentKind::PHI4_BOUND: return e2 * e2 * l2 * l2 / (x * x);
    case MomentKind::F2_BOUND: return e2 * std::sqrt(x);
  }
  return 1.0;
}

double envelope_constant(const MomentCurve& curve, double s_max) {
  double c = 0.0;
  for (std::size_t i = 0; i < curve.s_grid.size(); ++i) {
    if (curve.s_grid[i] > s_max + 1e-12) break;
    c = std::max(c, curve.values[i] / moment_shape(curve.kind, curve.epsilon, curve.s_grid[i]));
  }
  return c;
}

ReferenceSet compute_reference_set(double epsilon, std::span<const double> s_grid) {
  ReferenceSet r;
  r.phi2 = phi2_exact(epsilon, s_grid);
  r.sigma2 = sigma2_bound(epsilon, s_grid, r.phi2);
  r.phi4 = phi4_bound(epsilon, s_grid, r.phi2);
  r.f2 = f2_bound(epsilon, s_grid, r.phi2, r.sigma2, r.phi4);
  return r;
}

void write_curves_csv(std::ostream& out, const std::vector<const MomentCurve*>& curves) {
  out << "s,value,kind,epsilon\n";
  for (const MomentCurve* c : curves) {
    for (std::size_t i = 0; i < c->s_grid.size(); ++i) {
      out << format_number(c->s_grid[i]) << ',' << format_number(c->values[i]) << ','
          << to_string(c->kind) << ',' << format_number(c->epsilon) << '\n';
    }
  }
}

}  // namespace gffhom
