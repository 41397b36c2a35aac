#include "gffhom/evolution.hpp"

#include <cmath>
#include <string>

namespace gffhom {

double lambda_closed_form(double s, double epsilon) {
  if (s < 0.0) throw SimError(ErrorCode::NegativeTime, "s = " + std::to_string(s));
  return std::sqrt(1.0 + epsilon * epsilon * s);
}

ScaleState ScaleState::initial(GridSpec grid, double epsilon, bool track_gradients) {
  ScaleState st;
  st.s = 0.0;
  st.epsilon = epsilon;
  st.lambda = 1.0;
  st.psi = ScalarGrid(grid);
  st.phi_tilde = VectorGrid(grid);
  st.sigma_tilde = VectorGrid(grid);
  st.f = EndoGrid(grid);
  st.has_gradients = track_gradients;
  if (track_gradients) {
    st.grad_phi_tilde = EndoGrid(grid);
    st.grad_sigma_tilde = EndoGrid(grid);
  }
  return st;
}

EndoGrid coefficient_field(const ScaleState& state) {
  EndoGrid a(state.grid());
  const Mat2 jrot = Mat2::rotation_j();
  for (std::size_t p = 0; p < a.points(); ++p) {
    a.set(p, Mat2::identity() + (state.epsilon * state.psi[p]) * jrot);
  }
  return a;
}

ScaleState step(ScaleState state, const DriverIncrement& inc, const StepOptions& options) {
  const DriverFields fields = evaluate_drivers(inc, state.grid());
  return step(std::move(state), inc, fields, options);
}

ScaleState step(ScaleState state, const DriverIncrement& inc, const DriverFields& fields,
                const StepOptions& options) {
  if (std::abs(inc.s_start - state.s) > 1e-9 ||
      std::abs(inc.lambda_at_start - state.lambda) > 1e-12 * state.lambda) {
    throw SimError(ErrorCode::MismatchedIncrement,
                   "increment at s = " + std::to_string(inc.s_start) + " applied to state at s = " +
                       std::to_string(state.s));
  }
  require_same_grid(fields.spec(), state.grid(), "driver fields and state use different grids");

  const double eps = state.epsilon;
  const double drift = options.sigma_drift ? inc.ds * eps * eps / (2.0 * state.lambda) : 0.0;
  const Mat2 id = Mat2::identity();
  const Mat2 jrot = Mat2::rotation_j();
  const Mat2 jadj = adjoint(jrot);
  const bool grads = state.has_gradients;

  for (std::size_t p = 0; p < state.psi.points(); ++p) {
    const double psi = state.psi[p];
    const Vec2 phi = state.phi_tilde.get(p);
    const Vec2 sig = state.sigma_tilde.get(p);
    const Mat2 f = state.f.get(p);

    const double dpsi = fields.dpsi[p];
    const Vec2 gpsi = fields.grad_dpsi.get(p);
    const Vec2 dphi = fields.dphi.get(p);
    const Vec2 dsig = fields.dsigma.get(p);
    const Mat2 d = fields.grad_dphi.get(p);
    const Mat2 h0 = fields.grad_partial_dphi.get(p, 0);
    const Mat2 h1 = fields.grad_partial_dphi.get(p, 1);
    const Mat2 dt = adjoint(d);  // (dt v)^l = v^i d_i dphi^l

    const Mat2 a = id + (eps * psi) * jrot;

    state.phi_tilde.set(p, phi + eps * (dphi + dt * phi));
    state.sigma_tilde.set(p, sig + eps * (dsig + dt * sig + dpsi * phi) + drift * rotate_j(phi));
    const Mat2 df = f * d + (phi.x * a - sig.x * jrot) * h0 + (phi.y * a - sig.y * jrot) * h1 -
                    outer(rotate_j(gpsi), phi);
    state.f.set(p, f + eps * df);
    state.psi[p] = psi + dpsi;

    if (grads) {
      const Mat2 gp = state.grad_phi_tilde.get(p);
      const Mat2 gs = state.grad_sigma_tilde.get(p);
      const Mat2 dgp = (id + gp) * d + phi.x * h0 + phi.y * h1;
      const Mat2 dgs = fields.grad_dsigma.get(p) + gs * d + sig.x * h0 + sig.y * h1 +
                       outer(gpsi, phi) + dpsi * gp;
      state.grad_phi_tilde.set(p, gp + eps * dgp);
      state.grad_sigma_tilde.set(p, gs + eps * dgs + drift * (gp * jadj));
    }
  }

  state.s = inc.s_start + inc.ds;
  state.lambda = lambda_closed_form(state.s, eps);

  const bool finite = state.psi.all_finite() && state.phi_tilde.all_finite() &&
                      state.sigma_tilde.all_finite() && state.f.all_finite() &&
                      (!grads || (state.grad_phi_tilde.all_finite() &&
                                  state.grad_sigma_tilde.all_finite()));
  if (!finite) {
    throw SimError(ErrorCode::NonfiniteField,
                   "non-finite field value after step ending at s = " + std::to_string(state.s));
  }
  return state;
}

namespace {

Mat2 residuum_at(const ScaleState& st, std::size_t p) {
  const Mat2 jrot = Mat2::rotation_j();
  const Mat2 id = Mat2::identity();
  const Mat2 a = id + (st.epsilon * st.psi[p]) * jrot;
  return a * (id + st.grad_phi_tilde.get(p)) - st.lambda * id -
         jrot * st.grad_sigma_tilde.get(p) - st.f.get(p);
}

}  // namespace

EndoGrid residuum(const ScaleState& state) {
  if (!state.has_gradients) {
    throw SimError(ErrorCode::GradientUnavailable, "state was created without gradient tracking");
  }
  EndoGrid r(state.grid());
  for (std::size_t p = 0; p < r.points(); ++p) r.set(p, residuum_at(state, p));
  return r;
}

StepSummary summarize(const ScaleState& st) {
  StepSummary out;
  out.s_end = st.s;
  out.lambda = st.lambda;
  const std::size_t np = st.psi.points();
  double psi2 = 0, phi2 = 0, sig2 = 0, phi4 = 0, f2 = 0, r2 = 0, sjp = 0;
  Vec2 phi_sum;
  Mat2 f_sum;
  for (std::size_t p = 0; p < np; ++p) {
    const double psi = st.psi[p];
    const Vec2 phi = st.phi_tilde.get(p);
    const Vec2 sig = st.sigma_tilde.get(p);
    const Mat2 f = st.f.get(p);
    const double pp = norm2(phi);
    psi2 += psi * psi;
    phi2 += pp;
    phi4 += pp * pp;
    sig2 += norm2(sig);
    f2 += frobenius2(f);
    sjp += dot(sig, rotate_j(phi));
    phi_sum += phi;
    f_sum += f;
    if (st.has_gradients) r2 += frobenius2(residuum_at(st, p));
  }
  const double inv = np ? 1.0 / static_cast<double>(np) : 0.0;
  out.space_avg_psi2 = psi2 * inv;
  out.space_avg_phi2 = phi2 * inv;
  out.space_avg_sigma2 = sig2 * inv;
  out.space_avg_phi4 = phi4 * inv;
  out.space_avg_f2 = f2 * inv;
  out.space_avg_r2 = r2 * inv;
  out.space_avg_sigma_jphi = sjp * inv;
  out.space_avg_phi = inv * phi_sum;
  out.space_avg_f = inv * f_sum;
  return out;
}

namespace {

int integral_ratio(double num, double den, const char* what) {
  const double q = num / den;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * std::max(1.0, r)) {
    throw SimError(ErrorCode::ConfigError, std::string(what) + " must be a multiple of ds");
  }
  return static_cast<int>(r);
}

}  // namespace

int PathConfig::step_count() const {
  if (!(ds > 0.0)) throw SimError(ErrorCode::NonpositiveStep, "ds must be positive");
  if (s_max < 0.0) throw SimError(ErrorCode::ConfigError, "s_max must be >= 0");
  return integral_ratio(s_max, ds, "s_max");
}

int PathConfig::output_stride() const {
  if (!(output_every > 0.0)) throw SimError(ErrorCode::ConfigError, "output_every must be positive");
  return std::max(1, integral_ratio(output_every, ds, "output_every"));
}

PathResult run_path(const PathConfig& config, std::uint64_t seed) {
  const int n_steps = config.step_count();
  const int stride = config.output_stride();
  const double eps2 = config.epsilon * config.epsilon;

  Rng rng(seed);
  ScaleState state = ScaleState::initial(config.grid, config.epsilon, true);
  DriverFields fields(config.grid);
  PathResult out;
  out.summaries.push_back(summarize(state));

  for (int k = 0; k < n_steps; ++k) {
    const DriverIncrement inc =
        sample_increment(state.s, config.ds, state.lambda, config.sampler, rng);
    evaluate_drivers_into(inc, config.grid, fields);
    try {
      state = step(std::move(state), inc, fields, config.step);
    } catch (const SimError& e) {
      throw SimError(e.code(), e.detail() + " (step " + std::to_string(k) + ")");
    }
    const double defect = std::abs(state.lambda * state.lambda - 1.0 - eps2 * state.s);
    out.max_lambda_defect = std::max(out.max_lambda_defect, defect);
    if ((k + 1) % stride == 0 || k + 1 == n_steps) out.summaries.push_back(summarize(state));
  }
  return out;
}

}  // namespace gffhom
