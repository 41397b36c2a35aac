#include "gffhom/covariation_lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "gffhom/evolution.hpp"
#include "gffhom/format.hpp"
#include "gffhom/parallel.hpp"

namespace gffhom {

namespace {

struct KindInfo {
  CovariationKind kind;
  const char* tag;
};

constexpr KindInfo kKindTags[] = {
    {CovariationKind::QV_PSI, "QV_PSI"},
    {CovariationKind::COV_PSI_GRADPHI, "COV_PSI_GRADPHI"},
    {CovariationKind::QV_TR_GRADPHI, "QV_TR_GRADPHI"},
    {CovariationKind::QV_SECOND_DERIVS, "QV_SECOND_DERIVS"},
    {CovariationKind::QV_GRADPSI, "QV_GRADPSI"},
    {CovariationKind::QV_DSIGMA, "QV_DSIGMA"},
    {CovariationKind::NULL_PSI_HESSPHI, "NULL_PSI_HESSPHI"},
    {CovariationKind::NULL_GRADPHI_HESSPHI, "NULL_GRADPHI_HESSPHI"},
    {CovariationKind::NULL_GRADPHI_GRADPSI, "NULL_GRADPHI_GRADPSI"},
    {CovariationKind::QV_DPHI, "QV_DPHI"},
    {CovariationKind::QV_PARTIAL_DPHI, "QV_PARTIAL_DPHI"},
};

std::vector<std::string> component_names(CovariationKind kind) {
  static const std::vector<std::string> scalar{"value"};
  static const std::vector<std::string> matrix{"11", "12", "21", "22"};
  static const std::vector<std::string> family{"i1:11", "i1:12", "i1:21", "i1:22",
                                               "i2:11", "i2:12", "i2:21", "i2:22"};
  switch (kind) {
    case CovariationKind::COV_PSI_GRADPHI:
    case CovariationKind::QV_PARTIAL_DPHI:
      return matrix;
    case CovariationKind::NULL_PSI_HESSPHI:
    case CovariationKind::NULL_GRADPHI_HESSPHI:
    case CovariationKind::NULL_GRADPHI_GRADPSI:
      return family;
    default:
      return scalar;
  }
}

void push(std::vector<double>& v, const Mat2& m) {
  v.insert(v.end(), {m.xx, m.xy, m.yx, m.yy});
}

GridSpec lab_grid(double s, const LabConfig& lab) {
  if (lab.sampler.kind == SamplerKind::LatticeShell) return {lab.grid_n, lab.sampler.box_length};
  return {lab.grid_n, lab.box_wavelengths * 2.0 * std::numbers::pi * std::exp(s)};
}

std::uint64_t stream_seed(std::uint64_t seed, double s) {
  return derive_seed(seed, std::bit_cast<std::uint64_t>(s));
}

}  // namespace

const char* to_string(CovariationKind kind) {
  for (const auto& k : kKindTags) {
    if (k.kind == kind) return k.tag;
  }
  return "UNKNOWN";
}

CovariationKind parse_covariation_kind(std::string_view tag) {
  for (const auto& k : kKindTags) {
    if (tag == k.tag) return k.kind;
  }
  throw SimError(ErrorCode::UnknownKind, std::string(tag));
}

std::vector<double> covariation_target(CovariationKind kind, double s, double lambda) {
  const double l2 = std::exp(2.0 * s);
  const double lam2 = lambda * lambda;
  switch (kind) {
    case CovariationKind::QV_PSI:
      return {1.0};
    case CovariationKind::COV_PSI_GRADPHI: {
      // -J / (2 lambda)
      const double b = 0.5 / lambda;
      return {0.0, b, -b, 0.0};
    }
    case CovariationKind::QV_TR_GRADPHI:
      return {1.0 / lam2};
    case CovariationKind::QV_SECOND_DERIVS:
      return {1.0 / (lam2 * l2)};
    case CovariationKind::QV_GRADPSI:
      return {1.0 / l2};
    case CovariationKind::QV_DSIGMA:
      return {l2};
    case CovariationKind::NULL_PSI_HESSPHI:
    case CovariationKind::NULL_GRADPHI_HESSPHI:
    case CovariationKind::NULL_GRADPHI_GRADPSI:
      return std::vector<double>(8, 0.0);
    case CovariationKind::QV_DPHI:
      return {l2 / lam2};
    case CovariationKind::QV_PARTIAL_DPHI: {
      const double d = 0.5 / lam2;
      return {d, 0.0, 0.0, d};
    }
  }
  throw SimError(ErrorCode::UnknownKind, "covariation_target");
}

std::vector<double> covariation_sample(CovariationKind kind, const DriverFields& df, double ds) {
  const std::size_t np = df.dpsi.points();
  const std::size_t width = component_names(kind).size();
  std::vector<double> sum(width, 0.0);
  std::vector<double> cur;
  cur.reserve(width);

  for (std::size_t p = 0; p < np; ++p) {
    cur.clear();
    const double psi = df.dpsi[p];
    switch (kind) {
      case CovariationKind::QV_PSI:
        cur.push_back(psi * psi);
        break;
      case CovariationKind::COV_PSI_GRADPHI:
        push(cur, psi * df.grad_dphi.get(p));
        break;
      case CovariationKind::QV_TR_GRADPHI:
        cur.push_back(frobenius2(df.grad_dphi.get(p)));
        break;
      case CovariationKind::QV_SECOND_DERIVS:
        cur.push_back(frobenius2(df.grad_partial_dphi.get(p, 0)) +
                      frobenius2(df.grad_partial_dphi.get(p, 1)));
        break;
      case CovariationKind::QV_GRADPSI:
        cur.push_back(norm2(df.grad_dpsi.get(p)));
        break;
      case CovariationKind::QV_DSIGMA:
        cur.push_back(norm2(df.dsigma.get(p)));
        break;
      case CovariationKind::NULL_PSI_HESSPHI:
        for (int i = 0; i < 2; ++i) push(cur, psi * df.grad_partial_dphi.get(p, i));
        break;
      case CovariationKind::NULL_GRADPHI_HESSPHI: {
        const Mat2 d = df.grad_dphi.get(p);
        for (int i = 0; i < 2; ++i) push(cur, d * adjoint(df.grad_partial_dphi.get(p, i)));
        break;
      }
      case CovariationKind::NULL_GRADPHI_GRADPSI: {
        // grad dphi (grad dpsi (x) e_i)^* has entries (j, l) = grad dphi(j, i) g_l.
        const Mat2 d = df.grad_dphi.get(p);
        const Vec2 g = df.grad_dpsi.get(p);
        for (int i = 0; i < 2; ++i) push(cur, outer({d(0, i), d(1, i)}, g));
        break;
      }
      case CovariationKind::QV_DPHI:
        cur.push_back(norm2(df.dphi.get(p)));
        break;
      case CovariationKind::QV_PARTIAL_DPHI: {
        const Mat2 d = df.grad_dphi.get(p);
        push(cur, d * adjoint(d));
        break;
      }
    }
    for (std::size_t c = 0; c < width; ++c) sum[c] += cur[c];
  }
  const double scale = 1.0 / (static_cast<double>(np) * ds);
  for (double& v : sum) v *= scale;
  return sum;
}

FunctionalEstimate estimate_functional(
    double s, double epsilon, int n_samples, double ds, const LabConfig& lab,
    const std::function<std::vector<double>(const DriverFields&)>& functional) {
  if (n_samples < 2) throw SimError(ErrorCode::InsufficientSamples, "need at least 2 samples");
  const double lambda = lambda_closed_form(s, epsilon);
  const GridSpec grid = lab_grid(s, lab);
  const std::uint64_t base = stream_seed(lab.seed, s);

  std::vector<std::vector<double>> per_sample(static_cast<std::size_t>(n_samples));
  parallel_for(per_sample.size(), lab.workers, [&](std::size_t i) {
    Rng rng(derive_seed(base, i));
    const DriverIncrement inc = sample_increment(s, ds, lambda, lab.sampler, rng);
    per_sample[i] = functional(evaluate_drivers(inc, grid));
  });

  const std::size_t width = per_sample.front().size();
  FunctionalEstimate out;
  out.n_samples = n_samples;
  out.mean.assign(width, 0.0);
  out.std_error.assign(width, 0.0);
  for (const auto& v : per_sample) {
    for (std::size_t c = 0; c < width; ++c) out.mean[c] += v[c];
  }
  for (double& m : out.mean) m /= n_samples;
  for (const auto& v : per_sample) {
    for (std::size_t c = 0; c < width; ++c) {
      const double d = v[c] - out.mean[c];
      out.std_error[c] += d * d;
    }
  }
  for (double& e : out.std_error) e = std::sqrt(e / (n_samples - 1.0) / n_samples);
  return out;
}

namespace {

CovariationEstimate make_estimate(CovariationKind kind, double s, double lambda,
                                  const FunctionalEstimate& fe, std::size_t offset) {
  CovariationEstimate est;
  est.kind = kind;
  est.s = s;
  est.n_samples = fe.n_samples;
  const auto names = component_names(kind);
  const auto target = covariation_target(kind, s, lambda);
  for (std::size_t c = 0; c < names.size(); ++c) {
    ComponentEstimate ce;
    ce.name = names[c];
    ce.value = fe.mean[offset + c];
    ce.std_error = fe.std_error[offset + c];
    ce.target = target[c];
    const double diff = std::abs(ce.value - ce.target);
    ce.z = ce.std_error > 0.0 ? diff / ce.std_error
                              : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    est.z_score = std::max(est.z_score, ce.z);
    est.components.push_back(std::move(ce));
  }
  return est;
}

void require_samples(int n_samples) {
  if (n_samples < 100) {
    throw SimError(ErrorCode::InsufficientSamples,
                   "n_samples = " + std::to_string(n_samples) + " < 100");
  }
}

}  // namespace

CovariationEstimate estimate(CovariationKind kind, double s, double epsilon, int n_samples,
                             double ds, const LabConfig& lab) {
  require_samples(n_samples);
  const double lambda = lambda_closed_form(s, epsilon);
  const auto fe = estimate_functional(s, epsilon, n_samples, ds, lab, [&](const DriverFields& df) {
    return covariation_sample(kind, df, ds);
  });
  return make_estimate(kind, s, lambda, fe, 0);
}

std::vector<CovariationEstimate> estimate_all(double s, double epsilon, int n_samples, double ds,
                                              const LabConfig& lab) {
  require_samples(n_samples);
  const double lambda = lambda_closed_form(s, epsilon);
  const auto fe = estimate_functional(s, epsilon, n_samples, ds, lab, [&](const DriverFields& df) {
    std::vector<double> all;
    for (CovariationKind k : kAllCovariationKinds) {
      const auto v = covariation_sample(k, df, ds);
      all.insert(all.end(), v.begin(), v.end());
    }
    return all;
  });
  std::vector<CovariationEstimate> out;
  std::size_t offset = 0;
  for (CovariationKind k : kAllCovariationKinds) {
    out.push_back(make_estimate(k, s, lambda, fe, offset));
    offset += out.back().components.size();
  }
  return out;
}

int IdentityReport::failures() const {
  return static_cast<int>(std::count_if(estimates.begin(), estimates.end(), [&](const auto& e) {
    return !(e.z_score <= fail_threshold);
  }));
}

IdentityReport run_identity_suite(const std::vector<double>& s_list, double epsilon,
                                  int n_samples, double ds, const LabConfig& lab) {
  if (s_list.empty()) throw SimError(ErrorCode::InvalidArgument, "empty s list");
  IdentityReport report;
  for (double s : s_list) {
    auto est = estimate_all(s, epsilon, n_samples, ds, lab);
    report.estimates.insert(report.estimates.end(), est.begin(), est.end());
  }
  return report;
}

void write_identity_csv(std::ostream& out, const IdentityReport& report) {
  out << "kind,s,component,value,stderr,target,z\n";
  for (const auto& e : report.estimates) {
    for (const auto& c : e.components) {
      out << to_string(e.kind) << ',' << format_number(e.s) << ',' << c.name << ','
          << format_number(c.value) << ',' << format_number(c.std_error) << ','
          << format_number(c.target) << ',' << format_number(c.z, 6) << '\n';
    }
  }
}

void write_identity_table(std::ostream& out, const IdentityReport& report) {
  out << std::left << std::setw(22) << "kind" << std::setw(6) << "s" << std::setw(8) << "n"
      << std::setw(10) << "max|z|" << "status\n";
  for (const auto& e : report.estimates) {
    out << std::left << std::setw(22) << to_string(e.kind) << std::setw(6) << format_number(e.s, 4)
        << std::setw(8) << e.n_samples << std::setw(10) << format_number(e.z_score, 3)
        << (e.z_score <= report.fail_threshold ? "PASS" : "FAIL") << '\n';
  }
  out << report.failures() << " FAIL(s) at |z| > " << format_number(report.fail_threshold, 3)
      << '\n';
}

}  // namespace gffhom
