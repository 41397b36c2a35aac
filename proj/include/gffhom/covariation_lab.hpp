#pragma once

// Monte Carlo estimation of the covariation rates [dX dY] / ds of the
// drivers.  Each sample is a freshly drawn increment; the product is first
// averaged over the grid (stationarity) and then over samples, and the
// standard error comes from the scatter of the per-sample space averages.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gffhom/driver_spectral.hpp"

namespace gffhom {

enum class CovariationKind {
  QV_PSI,
  COV_PSI_GRADPHI,
  QV_TR_GRADPHI,
  QV_SECOND_DERIVS,
  QV_GRADPSI,
  QV_DSIGMA,
  NULL_PSI_HESSPHI,
  NULL_GRADPHI_HESSPHI,
  NULL_GRADPHI_GRADPSI,
  QV_DPHI,
  QV_PARTIAL_DPHI,
};

inline constexpr CovariationKind kAllCovariationKinds[] = {
    CovariationKind::QV_PSI,           CovariationKind::COV_PSI_GRADPHI,
    CovariationKind::QV_TR_GRADPHI,    CovariationKind::QV_SECOND_DERIVS,
    CovariationKind::QV_GRADPSI,       CovariationKind::QV_DSIGMA,
    CovariationKind::NULL_PSI_HESSPHI, CovariationKind::NULL_GRADPHI_HESSPHI,
    CovariationKind::NULL_GRADPHI_GRADPSI, CovariationKind::QV_DPHI,
    CovariationKind::QV_PARTIAL_DPHI,
};

const char* to_string(CovariationKind kind);
/// Throws UnknownKind for an unrecognized tag.
CovariationKind parse_covariation_kind(std::string_view tag);

struct ComponentEstimate {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double z = 0.0;
};

struct CovariationEstimate {
  CovariationKind kind{};
  double s = 0.0;
  std::vector<ComponentEstimate> components;  // scalar: 1, matrix: 4, i-indexed matrices: 8
  int n_samples = 0;
  double z_score = 0.0;                       // max over components
};

struct LabConfig {
  SamplerConfig sampler;
  int grid_n = 16;
  // Plane-wave box side in units of the current wavelength 2 pi e^s; the
  // lattice sampler uses sampler.box_length instead.
  double box_wavelengths = 4.0;
  std::uint64_t seed = 20240229;
  int workers = 0;  // 0: from the environment
};

/// Closed-form rate for the kind at log-scale s, component order as in estimate().
std::vector<double> covariation_target(CovariationKind kind, double s, double lambda);

/// Space-averaged products of one driver evaluation, per component, divided by ds.
std::vector<double> covariation_sample(CovariationKind kind, const DriverFields& df, double ds);

CovariationEstimate estimate(CovariationKind kind, double s, double epsilon, int n_samples,
                             double ds, const LabConfig& lab = {});

/// Estimates of every kind at one s from shared increments.
std::vector<CovariationEstimate> estimate_all(double s, double epsilon, int n_samples, double ds,
                                              const LabConfig& lab = {});

/// Generic estimator for derived functionals of the drivers; used for
/// structural checks (e.g. symmetric part of B).  `functional` returns
/// per-sample space averages already divided by ds.
struct FunctionalEstimate {
  std::vector<double> mean;
  std::vector<double> std_error;
  int n_samples = 0;
};
FunctionalEstimate estimate_functional(
    double s, double epsilon, int n_samples, double ds, const LabConfig& lab,
    const std::function<std::vector<double>(const DriverFields&)>& functional);

struct IdentityReport {
  std::vector<CovariationEstimate> estimates;
  double fail_threshold = 4.0;
  int failures() const;
};

IdentityReport run_identity_suite(const std::vector<double>& s_list, double epsilon,
                                  int n_samples, double ds, const LabConfig& lab = {});

/// CSV with header kind,s,component,value,stderr,target,z.
void write_identity_csv(std::ostream& out, const IdentityReport& report);
/// Fixed-width table with a PASS/FAIL column.
void write_identity_table(std::ostream& out, const IdentityReport& report);

}  // namespace gffhom
