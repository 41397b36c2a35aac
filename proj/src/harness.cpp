#include "gffhom/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "gffhom/error.hpp"
#include "gffhom/format.hpp"
#include "gffhom/parallel.hpp"
#include "gffhom/rng.hpp"

namespace gffhom {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string trim(std::string_view v) {
  const auto b = v.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = v.find_last_not_of(" \t\r");
  return std::string(v.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw SimError(ErrorCode::ConfigError, where + ": cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw SimError(ErrorCode::ConfigError, where + ": expected true or false, got '" + text + "'");
}

const char* sampler_name(SamplerKind k) {
  return k == SamplerKind::PlaneWave ? "plane-wave" : "lattice-shell";
}

void config_fail(const std::string& what) { throw SimError(ErrorCode::ConfigError, what); }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

template <class Get>
MeanSe ensemble_stats(std::size_t n, Get get) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += get(i);
  const double mean = sum / static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (get(i) - mean) * (get(i) - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

std::string trajectory_header() {
  std::string h = "s,lambda";
  for (const char* q : kMomentNames) h += std::string(",mean_") + q + ",se_" + q;
  return h;
}

}  // namespace

// ---- configuration ----------------------------------------------------------

double default_lattice_box(double s_max, double ds) {
  const int steps = static_cast<int>(std::llround(s_max / ds));
  double box = kTwoPi * std::exp(s_max) * 1.01;
  for (int attempt = 0; attempt < 5000; ++attempt, box *= 1.01) {
    bool ok = true;
    for (int k = 0; k < steps && ok; ++k) ok = lattice_shell_count(k * ds, ds, box) > 0;
    if (ok) return box;
  }
  throw SimError(ErrorCode::ConfigError, "no lattice box found for s_max = " +
                                             format_number(s_max) + ", ds = " + format_number(ds));
}

void SimConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) config_fail("epsilon must lie in (0, 1)");
  if (!(s_max >= 0.0) || !std::isfinite(s_max)) config_fail("s_max must be >= 0");
  if (!(ds > 0.0 && ds <= 0.1)) config_fail("ds must satisfy 0 < ds <= 0.1");
  if (ensemble < 1) config_fail("ensemble must be >= 1");
  if (grid_n < 16) config_fail("grid_n must be >= 16");
  if (n_modes < 1) config_fail("n_modes must be >= 1");
  if (box_length < 0.0) config_fail("box_length must be positive");
  if (!(output_every > 0.0)) config_fail("output_every must be positive");
  PathConfig pc;
  pc.s_max = s_max;
  pc.ds = ds;
  pc.output_every = output_every;
  pc.step_count();
  pc.output_stride();
  if (sampler == SamplerKind::LatticeShell && box_length > 0.0) {
    if (!(box_length > kTwoPi * std::exp(s_max))) {
      config_fail("lattice-shell needs box_length > 2 pi e^{s_max} = " +
                  format_number(kTwoPi * std::exp(s_max)));
    }
    const int steps = pc.step_count();
    for (int k = 0; k < steps; ++k) {
      if (lattice_shell_count(k * ds, ds, box_length) == 0) {
        config_fail("lattice annulus at s = " + format_number(k * ds) +
                    " is empty; try box_length = " + format_number(default_lattice_box(s_max, ds)));
      }
    }
  }
}

std::vector<std::string> SimConfig::warnings() const {
  std::vector<std::string> w;
  if (epsilon >= 0.5) {
    w.push_back("epsilon = " + format_number(epsilon) + " is outside the eps^2 << 1 regime");
  }
  return w;
}

double SimConfig::effective_box_length() const {
  if (box_length > 0.0) return box_length;
  if (sampler == SamplerKind::LatticeShell) return default_lattice_box(s_max, ds);
  return kTwoPi * std::exp(s_max);
}

PathConfig SimConfig::path_config() const {
  PathConfig pc;
  pc.epsilon = epsilon;
  pc.s_max = s_max;
  pc.ds = ds;
  pc.grid = GridSpec{grid_n, effective_box_length()};
  pc.sampler.kind = sampler;
  pc.sampler.n_modes = n_modes;
  pc.sampler.gaussian_amplitudes = gaussian_amplitudes;
  pc.sampler.box_length = pc.grid.box_length;
  pc.output_every = output_every;
  pc.step.sigma_drift = sigma_drift;
  return pc;
}

SimConfig parse_config(std::istream& in, const std::string& source) {
  SimConfig c;
  std::map<std::string, int> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_fail(where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (seen.count(key)) config_fail(where + ": repeated key '" + key + "'");
    seen[key] = line_no;

    if (key == "epsilon") c.epsilon = parse_number<double>(value, where);
    else if (key == "s_max") c.s_max = parse_number<double>(value, where);
    else if (key == "ds") c.ds = parse_number<double>(value, where);
    else if (key == "grid_n") c.grid_n = parse_number<int>(value, where);
    else if (key == "box_length") c.box_length = parse_number<double>(value, where);
    else if (key == "sampler") {
      if (value == "plane-wave") c.sampler = SamplerKind::PlaneWave;
      else if (value == "lattice-shell") c.sampler = SamplerKind::LatticeShell;
      else config_fail(where + ": sampler must be plane-wave or lattice-shell");
    }
    else if (key == "gaussian_amplitudes") c.gaussian_amplitudes = parse_bool(value, where);
    else if (key == "n_modes") c.n_modes = parse_number<int>(value, where);
    else if (key == "ensemble") c.ensemble = parse_number<int>(value, where);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, where);
    else if (key == "output_every") c.output_every = parse_number<double>(value, where);
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "sigma_drift") c.sigma_drift = parse_bool(value, where);
    else config_fail(where + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

std::string format_config(const SimConfig& c) {
  std::ostringstream o;
  o << "epsilon = " << format_number(c.epsilon) << '\n'
    << "s_max = " << format_number(c.s_max) << '\n'
    << "ds = " << format_number(c.ds) << '\n'
    << "grid_n = " << c.grid_n << '\n'
    << "box_length = " << format_number(c.box_length) << '\n'
    << "sampler = " << sampler_name(c.sampler) << '\n'
    << "gaussian_amplitudes = " << (c.gaussian_amplitudes ? "true" : "false") << '\n'
    << "n_modes = " << c.n_modes << '\n'
    << "ensemble = " << c.ensemble << '\n'
    << "seed = " << c.seed << '\n'
    << "output_every = " << format_number(c.output_every) << '\n'
    << "output_dir = " << c.output_dir << '\n'
    << "sigma_drift = " << (c.sigma_drift ? "true" : "false") << '\n';
  return o.str();
}

// ---- ensembles --------------------------------------------------------------

MomentTrajectory run_ensemble(const SimConfig& config, int workers) {
  config.validate();
  const PathConfig pc = config.path_config();
  const auto n = static_cast<std::size_t>(config.ensemble);
  std::vector<PathResult> paths(n);
  parallel_for(n, workers, [&](std::size_t i) {
    try {
      paths[i] = run_path(pc, derive_seed(config.seed, i));
    } catch (const std::exception& e) {
      throw SimError(ErrorCode::PathFailure, "path " + std::to_string(i) + ": " + e.what());
    }
  });

  MomentTrajectory t;
  t.ensemble = config.ensemble;
  for (const auto& p : paths) t.max_lambda_defect = std::max(t.max_lambda_defect, p.max_lambda_defect);
  const std::size_t n_out = paths.front().summaries.size();
  for (std::size_t j = 0; j < n_out; ++j) {
    const StepSummary& head = paths.front().summaries[j];
    auto at = [&](std::size_t i) -> const StepSummary& { return paths[i].summaries[j]; };

    TrajectoryRow row;
    row.s = head.s_end;
    row.lambda = head.lambda;
    const std::array<double StepSummary::*, 6> moments = {
        &StepSummary::space_avg_psi2,   &StepSummary::space_avg_phi2,
        &StepSummary::space_avg_sigma2, &StepSummary::space_avg_phi4,
        &StepSummary::space_avg_f2,     &StepSummary::space_avg_r2};
    for (std::size_t q = 0; q < moments.size(); ++q) {
      const MeanSe m = ensemble_stats(n, [&](std::size_t i) { return at(i).*moments[q]; });
      row.mean[q] = m.mean;
      row.se[q] = m.se;
    }
    t.rows.push_back(row);

    MartingaleRow mr;
    mr.s = head.s_end;
    const std::array<std::function<double(const StepSummary&)>, 7> parts = {
        [](const StepSummary& x) { return x.space_avg_phi.x; },
        [](const StepSummary& x) { return x.space_avg_phi.y; },
        [](const StepSummary& x) { return x.space_avg_f.xx; },
        [](const StepSummary& x) { return x.space_avg_f.xy; },
        [](const StepSummary& x) { return x.space_avg_f.yx; },
        [](const StepSummary& x) { return x.space_avg_f.yy; },
        [](const StepSummary& x) { return x.space_avg_sigma_jphi; }};
    for (std::size_t q = 0; q < parts.size(); ++q) {
      const MeanSe m = ensemble_stats(n, [&](std::size_t i) { return parts[q](at(i)); });
      mr.mean[q] = m.mean;
      mr.se[q] = m.se;
    }
    t.martingale.push_back(mr);
  }
  return t;
}

void write_trajectory_csv(std::ostream& out, const MomentTrajectory& t) {
  out << trajectory_header() << '\n';
  for (const auto& r : t.rows) {
    out << format_number(r.s) << ',' << format_number(r.lambda, 17);
    for (std::size_t q = 0; q < kMomentNames.size(); ++q) {
      out << ',' << format_number(r.mean[q]) << ',' << format_number(r.se[q]);
    }
    out << '\n';
  }
}

void write_martingale_csv(std::ostream& out, const MomentTrajectory& t) {
  out << "s";
  for (const char* q : kMartingaleNames) out << ",mean_" << q << ",se_" << q;
  out << '\n';
  for (const auto& r : t.martingale) {
    out << format_number(r.s);
    for (std::size_t q = 0; q < kMartingaleNames.size(); ++q) {
      out << ',' << format_number(r.mean[q]) << ',' << format_number(r.se[q]);
    }
    out << '\n';
  }
}

MomentTrajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != trajectory_header()) {
    config_fail("trajectory CSV header does not match " + trajectory_header());
  }
  MomentTrajectory t;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = "trajectory CSV line " + std::to_string(line_no);
    if (cells.size() != 2 + 2 * kMomentNames.size()) config_fail(where + ": wrong column count");
    TrajectoryRow r;
    r.s = parse_number<double>(cells[0], where);
    r.lambda = parse_number<double>(cells[1], where);
    for (std::size_t q = 0; q < kMomentNames.size(); ++q) {
      r.mean[q] = parse_number<double>(cells[2 + 2 * q], where);
      r.se[q] = parse_number<double>(cells[3 + 2 * q], where);
    }
    t.rows.push_back(r);
  }
  return t;
}

// ---- comparison -------------------------------------------------------------

bool CompareReport::passed() const {
  if (!messages.empty() || lines.empty()) return false;
  return std::all_of(lines.begin(), lines.end(), [](const CompareLine& l) { return l.pass; });
}

CompareReport compare(const MomentTrajectory& t, const ReferenceSet& oracles,
                      const CompareTolerances& tol) {
  if (t.rows.empty()) throw SimError(ErrorCode::EmptyTrajectory, "trajectory has no rows");
  CompareReport rep;
  const double eps = oracles.phi2.epsilon;
  rep.epsilon = eps;
  for (const MomentCurve* c : {&oracles.sigma2, &oracles.phi4, &oracles.f2}) {
    if (c->epsilon != eps) rep.messages.push_back("oracle curves disagree on epsilon");
  }

  const double s_top = t.rows.back().s;
  rep.sigma2_constant = envelope_constant(oracles.sigma2, s_top);
  rep.phi4_constant = envelope_constant(oracles.phi4, s_top);
  rep.f2_constant = envelope_constant(oracles.f2, s_top);

  bool any_positive_s = false;
  const TrajectoryRow* lambda_bad = nullptr;
  for (const auto& r : t.rows) {
    any_positive_s = any_positive_s || r.s > 0.0;
    const double lam = lambda_closed_form(r.s, eps);
    const bool lam_ok = std::abs(r.lambda - lam) <= tol.lambda_tolerance;
    rep.lines.push_back({r.s, "lambda", r.lambda, lam, tol.lambda_tolerance, lam_ok});
    if (!lam_ok && !lambda_bad) lambda_bad = &r;

    const double a_ref = oracles.phi2.at(r.s);
    const double a_lim = std::max(tol.phi2_sigmas * r.se[1], tol.phi2_relative * a_ref);
    rep.lines.push_back(
        {r.s, "phi2", r.mean[1], a_ref, a_lim, std::abs(r.mean[1] - a_ref) <= a_lim + 1e-300});

    auto envelope = [&](const char* name, std::size_t q, MomentKind kind, double constant) {
      const double lim = tol.envelope_factor * constant * moment_shape(kind, eps, r.s);
      rep.lines.push_back({r.s, name, r.mean[q], constant * moment_shape(kind, eps, r.s), lim,
                           r.mean[q] <= lim});
    };
    envelope("sigma2", 2, MomentKind::SIGMA2_BOUND, rep.sigma2_constant);
    envelope("phi4", 3, MomentKind::PHI4_BOUND, rep.phi4_constant);
    envelope("f2", 4, MomentKind::F2_BOUND, rep.f2_constant);

    rep.f2_tightness =
        std::max(rep.f2_tightness, r.mean[4] / moment_shape(MomentKind::F2_BOUND, eps, r.s));
  }
  if (!any_positive_s) rep.messages.push_back("trajectory has no row with s > 0");
  if (lambda_bad) {
    const double implied =
        lambda_bad->s > 0.0
            ? std::sqrt(std::max(0.0, lambda_bad->lambda * lambda_bad->lambda - 1.0) / lambda_bad->s)
            : 0.0;
    rep.messages.push_back("lambda column implies epsilon = " + format_number(implied, 6) +
                           " but the oracles use epsilon = " + format_number(eps, 6));
  }
  return rep;
}

void write_compare_report(std::ostream& out, const CompareReport& rep) {
  out << "epsilon " << format_number(rep.epsilon) << '\n';
  out << "envelope constants: sigma2 " << format_number(rep.sigma2_constant, 6) << ", phi4 "
      << format_number(rep.phi4_constant, 6) << ", f2 " << format_number(rep.f2_constant, 6)
      << '\n';
  out << "max E|f|^2 / (eps^2 lambda): " << format_number(rep.f2_tightness, 6) << '\n';
  out << std::left << std::setw(8) << "s" << std::setw(8) << "qty" << std::setw(16) << "measured"
      << std::setw(16) << "reference" << std::setw(16) << "limit" << "status\n";
  for (const auto& l : rep.lines) {
    out << std::left << std::setw(8) << format_number(l.s, 4) << std::setw(8) << l.quantity
        << std::setw(16) << format_number(l.measured, 6) << std::setw(16)
        << format_number(l.reference, 6) << std::setw(16) << format_number(l.limit, 6)
        << (l.pass ? "PASS" : "FAIL") << '\n';
  }
  for (const auto& m : rep.messages) out << "FAIL: " << m << '\n';
  out << (rep.passed() ? "PASS" : "FAIL") << '\n';
}

int count_martingale_violations(const MomentTrajectory& t, double sigmas) {
  int bad = 0;
  for (const auto& r : t.martingale) {
    if (r.s <= 0.0) continue;
    for (std::size_t q = 0; q < 6; ++q) {
      if (std::abs(r.mean[q]) > sigmas * r.se[q]) ++bad;
    }
  }
  return bad;
}

// ---- convergence ------------------------------------------------------------

bool ConvergenceTable::passed() const {
  if (rows.size() < 3) return false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].ratio >= min_ratio && rows[i].ratio <= max_ratio)) return false;
  }
  return true;
}

ConvergenceTable convergence_study(const SimConfig& config, const std::vector<double>& ds_list,
                                   int workers) {
  if (ds_list.size() < 3) config_fail("convergence study needs at least three ds values");
  for (std::size_t i = 1; i < ds_list.size(); ++i) {
    if (std::abs(2.0 * ds_list[i] / ds_list[i - 1] - 1.0) > 1e-9) {
      config_fail("ds values must halve at each level");
    }
  }
  if (!(config.s_max > 0.0)) config_fail("convergence study needs s_max > 0");

  ConvergenceTable table;
  for (double ds : ds_list) {
    SimConfig c = config;
    c.ds = ds;
    c.output_every = c.s_max;
    const MomentTrajectory t = run_ensemble(c, workers);
    ConvergenceRow row;
    row.ds = ds;
    row.r2 = t.rows.back().mean[5];
    row.r2_se = t.rows.back().se[5];
    if (!table.rows.empty()) {
      row.ratio = table.rows.back().r2 / row.r2;
      row.order = std::log2(row.ratio);
    }
    table.rows.push_back(row);
  }
  return table;
}

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table) {
  out << "ds,mean_r2,se_r2,ratio,order\n";
  for (const auto& r : table.rows) {
    out << format_number(r.ds) << ',' << format_number(r.r2) << ',' << format_number(r.r2_se)
        << ',' << format_number(r.ratio, 6) << ',' << format_number(r.order, 6) << '\n';
  }
}

}  // namespace gffhom
