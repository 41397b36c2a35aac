#pragma once

// Shell-supported white-noise increments d(psi) and the driver pair
// (d phi, d sigma) obtained from them by the Helmholtz decomposition
//
//     lambda grad d phi + d psi J = J grad d sigma,   E d phi = E d sigma = 0.
//
// Every increment is a finite sum of plane waves A cos(k.x + theta); all
// driver fields and their derivatives are evaluated as analytic per-mode
// sums, so the pointwise relations hold to rounding.

#include <cstdint>
#include <vector>

#include "gffhom/grid.hpp"
#include "gffhom/rng.hpp"

namespace gffhom {

enum class SamplerKind { PlaneWave, LatticeShell };

struct WaveMode {
  Vec2 k;              // wavevector, units 1/length
  double amplitude = 0.0;
  double phase = 0.0;  // in [0, 2 pi)
};

struct DriverIncrement {
  double s_start = 0.0;
  double ds = 0.0;
  double lambda_at_start = 1.0;
  std::vector<WaveMode> modes;
};

struct SamplerConfig {
  SamplerKind kind = SamplerKind::PlaneWave;
  int n_modes = 64;                 // plane-wave only; the lattice uses the whole annulus
  bool gaussian_amplitudes = false;
  double box_length = 0.0;          // lattice period; required for LatticeShell
  double amplitude_scale = 1.0;     // 1 except in negative controls
};

/// Draws one increment of d psi at log-scale s with variance ds per point.
///
/// Plane-wave: n_modes directions uniform on |k| = e^{-s}, uniform phases,
/// amplitude sqrt(2 ds / n_modes) (or complex-Gaussian weights of the same
/// mean energy).  Lattice-shell: every (2 pi / box) Z^2 mode in the annulus
/// e^{-(s+ds)} <= |k| <= e^{-s}, one representative per +-k pair.
DriverIncrement sample_increment(double s, double ds, double lambda, const SamplerConfig& config,
                                 Rng& rng);

/// Number of +-k lattice pairs in the annulus for the given box.
int lattice_shell_count(double s, double ds, double box_length);

/// Smallest box length (searched on a 1% geometric ladder from 2 pi e^s)
/// whose annulus contains at least one lattice mode.
double required_lattice_box(double s, double ds);

struct DriverFields {
  ScalarGrid dpsi;
  VectorGrid dphi;
  VectorGrid dsigma;
  VectorGrid grad_dpsi;
  EndoGrid grad_dphi;
  EndoGrid grad_dsigma;
  Tensor3Grid grad_partial_dphi;

  DriverFields() = default;
  explicit DriverFields(GridSpec spec);

  const GridSpec& spec() const { return dpsi.spec(); }
};

DriverFields evaluate_drivers(const DriverIncrement& inc, GridSpec grid);

/// Same as evaluate_drivers but reuses the storage of `out`.
void evaluate_drivers_into(const DriverIncrement& inc, GridSpec grid, DriverFields& out);

/// Max over the grid of |tr grad dphi|, |lambda tr(grad dphi J) - dpsi| and
/// |lambda grad dphi + dpsi J - J grad dsigma|_F.
double verify_pointwise_relations(const DriverFields& df, double lambda);

}  // namespace gffhom
