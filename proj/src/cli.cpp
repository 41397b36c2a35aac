#include "gffhom/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "gffhom/covariation_lab.hpp"
#include "gffhom/error.hpp"
#include "gffhom/format.hpp"
#include "gffhom/harness.hpp"
#include "gffhom/moment_reference.hpp"

namespace gffhom {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int samples = 10000;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

SimConfig resolve_config(const Options& o, bool required) {
  SimConfig c;
  if (!o.config_path.empty()) {
    c = load_config(o.config_path);
  } else if (required) {
    throw UsageError("--config <path> is required");
  }
  if (o.seed) c.seed = *o.seed;
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  return c;
}

fs::path prepare_out(const SimConfig& c) {
  fs::path dir(c.output_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw SimError(ErrorCode::ConfigError, "cannot write '" + p.string() + "'");
  return f;
}

void print_warnings(const SimConfig& c, std::ostream& err) {
  for (const auto& w : c.warnings()) err << "warning: " << w << '\n';
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const SimConfig c = resolve_config(o, true);
  print_warnings(c, err);
  const MomentTrajectory t = run_ensemble(c);
  const fs::path dir = prepare_out(c);
  {
    auto f = open_out(dir / "trajectory.csv");
    write_trajectory_csv(f, t);
  }
  {
    auto f = open_out(dir / "martingale.csv");
    write_martingale_csv(f, t);
  }
  out << "wrote " << (dir / "trajectory.csv").string() << " and martingale.csv (" << t.rows.size()
      << " rows, ensemble " << t.ensemble << ")\n";
  out << "max |lambda^2 - 1 - eps^2 s| = " << format_number(t.max_lambda_defect, 3) << '\n';
  return 0;
}

int cmd_qv_check(const Options& o, std::ostream& out, std::ostream& err) {
  const SimConfig c = resolve_config(o, false);
  print_warnings(c, err);
  LabConfig lab;
  lab.sampler.kind = c.sampler;
  lab.sampler.n_modes = c.n_modes;
  lab.sampler.gaussian_amplitudes = c.gaussian_amplitudes;
  if (c.sampler == SamplerKind::LatticeShell) lab.sampler.box_length = c.effective_box_length();
  if (o.seed) lab.seed = *o.seed;
  const IdentityReport report = run_identity_suite({0.0, 1.0, 3.0}, c.epsilon, o.samples, c.ds, lab);
  const fs::path dir = prepare_out(c);
  {
    auto f = open_out(dir / "identities.csv");
    write_identity_csv(f, report);
  }
  write_identity_table(out, report);
  out << "wrote " << (dir / "identities.csv").string() << '\n';
  return report.failures() == 0 ? 0 : 1;
}

int cmd_reference(const Options& o, std::ostream& out, std::ostream&) {
  const SimConfig c = resolve_config(o, false);
  const auto grid = uniform_s_grid(c.s_max, c.ds);
  const ReferenceSet r = compute_reference_set(c.epsilon, grid);
  const fs::path dir = prepare_out(c);
  {
    auto f = open_out(dir / "reference.csv");
    write_curves_csv(f, {&r.phi2, &r.sigma2, &r.phi4, &r.f2});
  }
  out << "envelope constants on [0, " << format_number(c.s_max) << "] at eps "
      << format_number(c.epsilon) << ": phi2 " << format_number(envelope_constant(r.phi2, c.s_max), 6)
      << ", sigma2 " << format_number(envelope_constant(r.sigma2, c.s_max), 6) << ", phi4 "
      << format_number(envelope_constant(r.phi4, c.s_max), 6) << ", f2 "
      << format_number(envelope_constant(r.f2, c.s_max), 6) << '\n';
  out << "wrote " << (dir / "reference.csv").string() << '\n';
  return 0;
}

int cmd_convergence(const Options& o, std::ostream& out, std::ostream& err) {
  const SimConfig c = resolve_config(o, true);
  print_warnings(c, err);
  const ConvergenceTable table = convergence_study(c, {4.0 * c.ds, 2.0 * c.ds, c.ds});
  const fs::path dir = prepare_out(c);
  {
    auto f = open_out(dir / "convergence.csv");
    write_convergence_csv(f, table);
  }
  write_convergence_csv(out, table);
  out << (table.passed() ? "PASS" : "FAIL") << ": ratios in [" << format_number(table.min_ratio)
      << ", " << format_number(table.max_ratio) << "]\n";
  return table.passed() ? 0 : 1;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream&) {
  const SimConfig c = resolve_config(o, true);
  const fs::path dir(c.output_dir);
  const fs::path traj_path = dir / "trajectory.csv";
  std::ifstream in(traj_path);
  if (!in) throw UsageError("cannot open trajectory '" + traj_path.string() + "'");
  const MomentTrajectory t = read_trajectory_csv(in);
  if (t.rows.empty()) throw SimError(ErrorCode::EmptyTrajectory, traj_path.string());
  const double s_top = t.rows.back().s;
  const auto grid = uniform_s_grid(s_top, 0.01);
  const CompareReport rep = compare(t, compute_reference_set(c.epsilon, grid));
  {
    auto f = open_out(dir / "report.txt");
    write_compare_report(f, rep);
  }
  write_compare_report(out, rep);
  return rep.passed() ? 0 : 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scale-by-scale homogenization simulator", "gffhom"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Config file (flat key = value)");
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--out", o.out_dir, "Output directory (overrides the config)");
  };
  auto* simulate = app.add_subcommand("simulate", "Run the ensemble and write trajectory CSVs");
  auto* qv = app.add_subcommand("qv-check", "Estimate all covariation identities");
  auto* reference = app.add_subcommand("reference", "Write the oracle moment curves");
  auto* convergence = app.add_subcommand("convergence", "Residuum convergence over ds, ds/2, ds/4");
  auto* report = app.add_subcommand("report", "Compare a trajectory with the oracles");
  for (auto* sub : {simulate, qv, reference, convergence, report}) add_common(sub);
  qv->add_option("--samples", o.samples, "Samples per s")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return 2;
  }
  for (const auto* sub : {simulate, qv, reference, convergence, report}) {
    if (sub->count("--seed") > 0) o.seed = seed;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    if (qv->parsed()) return cmd_qv_check(o, out, err);
    if (reference->parsed()) return cmd_reference(o, out, err);
    if (convergence->parsed()) return cmd_convergence(o, out, err);
    if (report->parsed()) return cmd_report(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const SimError& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gffhom
