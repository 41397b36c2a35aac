#include "gffhom/driver_spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace gffhom {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

// Calls f(k) for one representative of every +-k lattice pair in the annulus.
template <class F>
void for_each_shell_mode(double s, double ds, double box_length, F&& f) {
  const double r_out = std::exp(-s);
  const double r_in = std::exp(-(s + ds));
  const double dk = kTwoPi / box_length;
  auto visit = [&](int m1, int m2) {
    if (m2 == 0 && m1 <= 0) return;
    const Vec2 k{dk * m1, dk * m2};
    const double r = std::sqrt(norm2(k));
    if (r >= r_in && r <= r_out) f(k);
  };
  // Row by row, only the |m1| range that can reach the annulus.
  const int m2_max = static_cast<int>(std::floor(r_out / dk)) + 1;
  for (int m2 = 0; m2 <= m2_max; ++m2) {
    const double y = dk * m2;
    const double x_out = std::sqrt(std::max(0.0, r_out * r_out - y * y)) / dk;
    const double x_in = std::sqrt(std::max(0.0, r_in * r_in - y * y)) / dk;
    const int lo = std::max(0, static_cast<int>(std::floor(x_in)) - 1);
    const int hi = static_cast<int>(std::ceil(x_out)) + 1;
    for (int m1 = -hi; m1 <= -lo; ++m1) {
      if (m1 != 0 || lo == 0) visit(m1, m2);
    }
    for (int m1 = std::max(lo, 1); m1 <= hi; ++m1) visit(m1, m2);
  }
}

void fill_amplitudes(std::vector<WaveMode>& modes, double ds, const SamplerConfig& config,
                     Rng& rng) {
  const double count = static_cast<double>(modes.size());
  if (config.gaussian_amplitudes) {
    const double sd = std::sqrt(ds / count);
    for (auto& m : modes) {
      const double a = sd * rng.normal();
      const double b = sd * rng.normal();
      m.amplitude = config.amplitude_scale * std::hypot(a, b);
      m.phase = wrap_phase(std::atan2(-b, a));
    }
  } else {
    const double amp = config.amplitude_scale * std::sqrt(2.0 * ds / count);
    for (auto& m : modes) {
      m.amplitude = amp;
      m.phase = rng.uniform_angle();
    }
  }
}

}  // namespace

int lattice_shell_count(double s, double ds, double box_length) {
  int count = 0;
  for_each_shell_mode(s, ds, box_length, [&](const Vec2&) { ++count; });
  return count;
}

double required_lattice_box(double s, double ds) {
  double box = kTwoPi * std::exp(s);
  for (int i = 0; i < 2000; ++i, box *= 1.01) {
    if (lattice_shell_count(s, ds, box) > 0) return box;
  }
  return box;
}

DriverIncrement sample_increment(double s, double ds, double lambda, const SamplerConfig& config,
                                 Rng& rng) {
  if (!(ds > 0.0)) throw SimError(ErrorCode::NonpositiveStep, "ds = " + std::to_string(ds));
  if (!(lambda >= 1.0)) throw SimError(ErrorCode::InvalidArgument, "lambda must be >= 1");

  DriverIncrement inc;
  inc.s_start = s;
  inc.ds = ds;
  inc.lambda_at_start = lambda;

  if (config.kind == SamplerKind::PlaneWave) {
    if (config.n_modes < 1) throw SimError(ErrorCode::InvalidArgument, "n_modes must be >= 1");
    const double radius = std::exp(-s);
    inc.modes.resize(static_cast<std::size_t>(config.n_modes));
    for (auto& m : inc.modes) {
      const double angle = rng.uniform_angle();
      m.k = {radius * std::cos(angle), radius * std::sin(angle)};
    }
  } else {
    if (!(config.box_length > 0.0)) {
      throw SimError(ErrorCode::InvalidArgument, "lattice sampler needs a positive box_length");
    }
    for_each_shell_mode(s, ds, config.box_length,
                        [&](const Vec2& k) { inc.modes.push_back({k, 0.0, 0.0}); });
    if (inc.modes.empty()) {
      throw SimError(ErrorCode::EmptyShell,
                     "no lattice mode in annulus at s = " + std::to_string(s) +
                         "; box_length >= " + std::to_string(required_lattice_box(s, ds)) +
                         " required");
    }
  }
  fill_amplitudes(inc.modes, ds, config, rng);
  return inc;
}

DriverFields::DriverFields(GridSpec spec)
    : dpsi(spec),
      dphi(spec),
      dsigma(spec),
      grad_dpsi(spec),
      grad_dphi(spec),
      grad_dsigma(spec),
      grad_partial_dphi(spec) {}

DriverFields evaluate_drivers(const DriverIncrement& inc, GridSpec grid) {
  DriverFields out;
  evaluate_drivers_into(inc, grid, out);
  return out;
}

void evaluate_drivers_into(const DriverIncrement& inc, GridSpec grid, DriverFields& out) {
  if (grid.n < 4 || !(grid.box_length > 0.0)) {
    throw SimError(ErrorCode::GridMismatch, "grid needs n >= 4 and box_length > 0");
  }
  if (!(out.spec() == grid)) out = DriverFields(grid);

  const int n = grid.n;
  const std::size_t nm = inc.modes.size();
  const double inv_lambda = 1.0 / inc.lambda_at_start;

  // Per mode, with unit direction (x, y), |k| = kappa, every driver quantity
  // is a monomial in (x, y) times A cos or A sin of the phase.  Twelve sums
  // suffice:
  //   cos: 1, xx, xy, yy                  (dpsi, grad dphi, grad dsigma)
  //   sin / kappa: x, y                   (dphi, dsigma)
  //   sin * kappa: x, y, xxx, xxy, xyy, yyy  (grad dpsi, grad d_i dphi)
  constexpr int kSums = 12;
  std::vector<std::array<double, kSums>> weight(nm);
  std::vector<double> e1c(nm * n), e1s(nm * n), e2c(nm * n), e2s(nm * n);
  for (std::size_t m = 0; m < nm; ++m) {
    const WaveMode& mode = inc.modes[m];
    const double kappa = std::sqrt(norm2(mode.k));
    if (!(kappa > 0.0)) throw SimError(ErrorCode::InvalidArgument, "k = 0 mode in increment");
    const double x = mode.k.x / kappa;
    const double y = mode.k.y / kappa;
    const double a = mode.amplitude;
    const double am = a / kappa;
    const double ap = a * kappa;
    weight[m] = {a,      a * x * x,  a * x * y,      a * y * y,      am * x,         am * y,
                 ap * x, ap * y,     ap * x * x * x, ap * x * x * y, ap * x * y * y, ap * y * y * y};
    // Angle-addition recurrence along each axis, re-anchored every 16 points.
    const double h = grid.spacing();
    const double r1c = std::cos(mode.k.x * h), r1s = std::sin(mode.k.x * h);
    const double r2c = std::cos(mode.k.y * h), r2s = std::sin(mode.k.y * h);
    for (int i = 0; i < n; ++i) {
      const std::size_t o = m * n + i;
      if (i % 16 == 0) {
        const double c = grid.coord(i);
        e1c[o] = std::cos(mode.k.x * c + mode.phase);
        e1s[o] = std::sin(mode.k.x * c + mode.phase);
        e2c[o] = std::cos(mode.k.y * c);
        e2s[o] = std::sin(mode.k.y * c);
      } else {
        e1c[o] = e1c[o - 1] * r1c - e1s[o - 1] * r1s;
        e1s[o] = e1s[o - 1] * r1c + e1c[o - 1] * r1s;
        e2c[o] = e2c[o - 1] * r2c - e2s[o - 1] * r2s;
        e2s[o] = e2s[o - 1] * r2c + e2c[o - 1] * r2s;
      }
    }
  }

  std::vector<double> acc(static_cast<std::size_t>(kSums) * n);
  // Accumulates the sums for columns [a0, a0 + B) of row b in registers.
  auto accumulate_block = [&]<int B>(int b, int a0) {
    double q[kSums][B] = {};
    for (std::size_t m = 0; m < nm; ++m) {
      const double c2 = e2c[m * n + b];
      const double s2 = e2s[m * n + b];
      const double* c1 = &e1c[m * n + a0];
      const double* s1 = &e1s[m * n + a0];
      const auto& w = weight[m];
      double cs[B], sn[B];
      for (int j = 0; j < B; ++j) {
        cs[j] = c1[j] * c2 - s1[j] * s2;
        sn[j] = s1[j] * c2 + c1[j] * s2;
      }
      for (int k = 0; k < 4; ++k) {
        for (int j = 0; j < B; ++j) q[k][j] += w[k] * cs[j];
      }
      for (int k = 4; k < kSums; ++k) {
        for (int j = 0; j < B; ++j) q[k][j] += w[k] * sn[j];
      }
    }
    for (int k = 0; k < kSums; ++k) {
      for (int j = 0; j < B; ++j) acc[k * n + a0 + j] = q[k][j];
    }
  };

  for (int b = 0; b < n; ++b) {
    int a0 = 0;
    for (; a0 + 4 <= n; a0 += 4) accumulate_block.template operator()<4>(b, a0);
    for (; a0 < n; ++a0) accumulate_block.template operator()<1>(b, a0);
    for (int a = 0; a < n; ++a) {
      const std::size_t p = static_cast<std::size_t>(b) * n + a;
      const double c0 = acc[a];
      const double cxx = acc[n + a], cxy = acc[2 * n + a], cyy = acc[3 * n + a];
      const double smx = acc[4 * n + a], smy = acc[5 * n + a];
      const double spx = acc[6 * n + a], spy = acc[7 * n + a];
      // t[c] = sum A kappa sin * (x^{3-c} y^c)
      const double t[4] = {acc[8 * n + a], acc[9 * n + a], acc[10 * n + a], acc[11 * n + a]};

      out.dpsi[p] = c0;
      out.grad_dpsi.set(p, {-spx, -spy});
      out.dsigma.set(p, {smx, smy});
      out.dphi.set(p, inv_lambda * rotate_j({smx, smy}));
      out.grad_dsigma.set(p, {cxx, cxy, cxy, cyy});
      // grad dphi (j, i) = sum A cos k_j (J k)_i / lambda, with J k = (-y, x).
      out.grad_dphi.set(p, inv_lambda * Mat2{-cxy, cxx, -cyy, cxy});
      // H_i(j, l) = -sum A kappa sin k_i k_j (J k)_l / lambda.
      for (int i = 0; i < 2; ++i) {
        const Mat2 h{t[i + 1], -t[i], t[i + 2], -t[i + 1]};
        out.grad_partial_dphi.set(p, i, inv_lambda * h);
      }
    }
  }
}

double verify_pointwise_relations(const DriverFields& df, double lambda) {
  const Mat2 jrot = Mat2::rotation_j();
  double worst = 0.0;
  for (std::size_t p = 0; p < df.dpsi.points(); ++p) {
    const Mat2 g = df.grad_dphi.get(p);
    const double psi = df.dpsi[p];
    const Mat2 helm = lambda * g + psi * jrot - jrot * df.grad_dsigma.get(p);
    worst = std::max({worst, std::abs(trace(g)), std::abs(lambda * trace(g * jrot) - psi),
                      std::sqrt(frobenius2(helm))});
  }
  return worst;
}

}  // namespace gffhom
