#pragma once

// Explicit Ito (left-endpoint) stepping of the proxy corrector phi~, the
// proxy flux corrector sigma~, the residuum f and the stream function psi in
// log-scale time s = ln L, with lambda~ advanced by its closed form.

#include <cstdint>
#include <vector>

#include "gffhom/driver_spectral.hpp"
#include "gffhom/grid.hpp"

namespace gffhom {

/// sqrt(1 + eps^2 s); throws NegativeTime for s < 0.
double lambda_closed_form(double s, double epsilon);

struct ScaleState {
  double s = 0.0;
  double epsilon = 0.0;
  double lambda = 1.0;
  ScalarGrid psi;
  VectorGrid phi_tilde;
  VectorGrid sigma_tilde;
  EndoGrid f;
  // Running grad phi~ and grad sigma~, advanced by their analytic increments.
  bool has_gradients = true;
  EndoGrid grad_phi_tilde;
  EndoGrid grad_sigma_tilde;

  /// The s = 0 state: lambda = 1 and every field zero.
  static ScaleState initial(GridSpec grid, double epsilon, bool track_gradients = true);

  const GridSpec& grid() const { return psi.spec(); }
};

struct StepOptions {
  // Drift J phi~ eps^2 / (2 lambda) ds of the sigma~ equation; switched off
  // only for negative controls.
  bool sigma_drift = true;
};

/// a = id + eps psi J pointwise.
EndoGrid coefficient_field(const ScaleState& state);

/// One Euler-Maruyama step driven by `inc` (evaluated on the state's grid).
ScaleState step(ScaleState state, const DriverIncrement& inc, const StepOptions& options = {});

/// Same step with pre-evaluated drivers; `fields` must be the evaluation of `inc`.
ScaleState step(ScaleState state, const DriverIncrement& inc, const DriverFields& fields,
                const StepOptions& options = {});

/// r = a (id + grad phi~) - lambda id - J grad sigma~ - f.
EndoGrid residuum(const ScaleState& state);

struct StepSummary {
  double s_end = 0.0;
  double lambda = 1.0;
  double space_avg_psi2 = 0.0;
  double space_avg_phi2 = 0.0;
  double space_avg_sigma2 = 0.0;
  double space_avg_phi4 = 0.0;
  double space_avg_f2 = 0.0;
  double space_avg_r2 = 0.0;
  // Martingale diagnostics and the cross term sigma~ . J phi~.
  Vec2 space_avg_phi;
  Mat2 space_avg_f;
  double space_avg_sigma_jphi = 0.0;
};

StepSummary summarize(const ScaleState& state);

struct PathConfig {
  double epsilon = 0.1;
  double s_max = 3.0;
  double ds = 0.01;
  GridSpec grid{64, 0.0};
  SamplerConfig sampler;
  double output_every = 0.1;
  StepOptions step;

  /// Number of steps to reach s_max; throws ConfigError unless s_max / ds is integral.
  int step_count() const;
  /// Steps between summaries; throws ConfigError unless output_every / ds is integral.
  int output_stride() const;
};

struct PathResult {
  std::vector<StepSummary> summaries;
  // max over all steps of |lambda^2 - 1 - eps^2 s|
  double max_lambda_defect = 0.0;
};

/// Runs one path from s = 0 to s_max; bit-reproducible for fixed (config, seed).
PathResult run_path(const PathConfig& config, std::uint64_t seed);

}  // namespace gffhom
