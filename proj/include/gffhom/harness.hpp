#pragma once

// Configuration, ensemble runs, oracle comparison and convergence studies.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gffhom/evolution.hpp"
#include "gffhom/moment_reference.hpp"

namespace gffhom {

struct SimConfig {
  double epsilon = 0.1;
  double s_max = 3.0;
  double ds = 0.01;
  int grid_n = 64;
  double box_length = 0.0;  // 0: 2 pi e^{s_max} (plane-wave) or the smallest valid lattice box
  SamplerKind sampler = SamplerKind::PlaneWave;
  bool gaussian_amplitudes = false;
  int n_modes = 64;
  int ensemble = 200;
  std::uint64_t seed = 1;
  double output_every = 0.1;
  std::string output_dir = "out";
  bool sigma_drift = true;

  /// Throws ConfigError on a violated invariant.
  void validate() const;
  /// Advisory messages for valid but doubtful settings (eps >= 0.5).
  std::vector<std::string> warnings() const;
  /// box_length, or its default when unset.
  double effective_box_length() const;
  PathConfig path_config() const;
};

/// Flat `key = value` text with `#` comments.  Unknown or repeated keys,
/// malformed values and invalid configurations throw ConfigError.
SimConfig parse_config(std::istream& in, const std::string& source = "<config>");
/// Throws ConfigError naming the path when the file cannot be opened.
SimConfig load_config(const std::string& path);
std::string format_config(const SimConfig& config);

/// Smallest box on a 1% ladder above 2 pi e^{s_max} whose annulus is
/// nonempty at every step.
double default_lattice_box(double s_max, double ds);

inline constexpr std::array<const char*, 6> kMomentNames = {"psi2",   "phi2", "sigma2",
                                                            "phi4",   "f2",   "r2"};
inline constexpr std::array<const char*, 7> kMartingaleNames = {
    "phi_x", "phi_y", "f_xx", "f_xy", "f_yx", "f_yy", "sigma_jphi"};

struct TrajectoryRow {
  double s = 0.0;
  double lambda = 1.0;
  std::array<double, 6> mean{};
  std::array<double, 6> se{};
};

/// Means of phi~, f and the cross term sigma~ . J phi~.
struct MartingaleRow {
  double s = 0.0;
  std::array<double, 7> mean{};
  std::array<double, 7> se{};
};

struct MomentTrajectory {
  std::vector<TrajectoryRow> rows;
  std::vector<MartingaleRow> martingale;
  int ensemble = 0;
  double max_lambda_defect = 0.0;
};

/// All paths with seeds derive_seed(config.seed, i); results are reduced in
/// path order, so the output does not depend on `workers` (0: environment).
/// A failing path aborts the run with PathFailure naming its index.
MomentTrajectory run_ensemble(const SimConfig& config, int workers = 0);

/// Columns s,lambda,mean_<q>,se_<q> for q in kMomentNames.
void write_trajectory_csv(std::ostream& out, const MomentTrajectory& t);
/// Columns s,mean_<q>,se_<q> for q in kMartingaleNames.
void write_martingale_csv(std::ostream& out, const MomentTrajectory& t);
/// Reads write_trajectory_csv output; ConfigError on a schema mismatch.
MomentTrajectory read_trajectory_csv(std::istream& in);

struct CompareTolerances {
  double phi2_sigmas = 3.0;
  double phi2_relative = 0.15;
  double envelope_factor = 1.5;
  double lambda_tolerance = 1e-9;
};

struct CompareLine {
  double s = 0.0;
  std::string quantity;
  double measured = 0.0;
  double reference = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct CompareReport {
  double epsilon = 0.0;
  std::vector<CompareLine> lines;
  std::vector<std::string> messages;  // reasons for failures that are not per-row
  // Envelope constants sup value / shape from the oracle curves.
  double sigma2_constant = 0.0;
  double phi4_constant = 0.0;
  double f2_constant = 0.0;
  // Reported only: max over rows of mean |f|^2 / (eps^2 lambda).
  double f2_tightness = 0.0;
  bool passed() const;
};

/// Checks |phi~|^2 against the exact curve and sigma2, phi4, f2 against
/// their envelopes.  Throws EmptyTrajectory for no rows and GridMismatch when
/// a row lies outside the oracle grid.  A trajectory whose lambda column
/// disagrees with the oracle epsilon fails.
CompareReport compare(const MomentTrajectory& t, const ReferenceSet& oracles,
                      const CompareTolerances& tol = {});

void write_compare_report(std::ostream& out, const CompareReport& report);

/// Componentwise |mean| <= sigmas * se for phi~ and f; the cross term is
/// not checked.  Returns the number of violations.
int count_martingale_violations(const MomentTrajectory& t, double sigmas = 3.0);

struct ConvergenceRow {
  double ds = 0.0;
  double r2 = 0.0;
  double r2_se = 0.0;
  double ratio = 0.0;  // previous r2 / r2 (0 on the first row)
  double order = 0.0;  // log2 ratio
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double min_ratio = 1.6;
  double max_ratio = 2.4;
  bool passed() const;
};

/// Runs the ensemble once per ds (other settings from `config`) and records
/// the final mean |r|^2.  ds_list needs at least three entries, each half
/// the previous one.
ConvergenceTable convergence_study(const SimConfig& config, const std::vector<double>& ds_list,
                                   int workers = 0);

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table);

}  // namespace gffhom
