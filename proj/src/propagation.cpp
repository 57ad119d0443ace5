#include "nfmem/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "nfmem/error.hpp"

namespace nfmem::propagation {
namespace {

constexpr double kMinStepsPerFwhm = 20.0;
constexpr int kMinZSteps = 50;
constexpr double kMaxStepRate = 0.5;

// exp(M h) for the symmetric 2x2 block M = [[a, b], [b, d]].
struct Propagator2 {
  complex m00, m01, m11;

  static Propagator2 make(complex a, complex b, complex d, double h) {
    const complex mean = 0.5 * (a + d);
    const complex half = 0.5 * (a - d);
    const complex s = std::sqrt(half * half + b * b);
    const complex sh = s * h;
    const complex ch = std::cosh(sh);
    complex sinc;  // sinh(s h) / s
    if (std::abs(sh) < 1e-4) {
      sinc = h * (1.0 + sh * sh / 6.0);
    } else {
      sinc = std::sinh(sh) / s;
    }
    const complex e = std::exp(mean * h);
    return {e * (ch + sinc * half), e * sinc * b, e * (ch - sinc * half)};
  }

  void apply(complex& p, complex& q) const {
    const complex np = m00 * p + m01 * q;
    const complex nq = m01 * p + m11 * q;
    p = np;
    q = nq;
  }
};

double checked_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

void validate_case(const PropagationCase& c) {
  c.probe.validate();
  c.control.validate();
  c.scheme.validate();
  if (!(c.medium.od >= 0.0)) throw DomainError("optical depth must be non-negative");
  if (!(c.medium.length_m > 0.0)) throw DomainError("medium length must be positive");
  const auto& g = c.grid;
  if (!(g.dt_s > 0.0) || !(g.t_end_s > g.t_start_s)) {
    throw DomainError("time grid must have dt > 0 and t_end > t_start");
  }
  if (c.probe.fwhm_s / g.dt_s < kMinStepsPerFwhm) {
    throw SolverError("time step under-resolves the probe (need >= 20 steps per FWHM)");
  }
  if (g.nz < kMinZSteps) throw SolverError("spatial grid under-resolves the medium (nz < 50)");
  const double omega = std::max(c.control.rabi_rad_per_s, c.control.dephasing_rabi_rad_per_s);
  const double gamma = c.scheme.gamma_ge_rad_per_s;
  const double rate = std::max({0.5 * gamma, 0.5 * omega, 0.25 * gamma * c.medium.od,
                                std::abs(c.probe.detuning_rad_per_s),
                                c.scheme.effective_gamma_gs(omega)});
  if (g.dt_s * rate > kMaxStepRate) {
    throw SolverError("step-size violation: dt * max rate exceeds 0.5");
  }
}

}  // namespace

void ProbePulse::validate() const {
  if (!(mean_photon_number > 0.0)) throw DomainError("mean photon number must be positive");
  if (!(fwhm_s > 0.0)) throw DomainError("pulse FWHM must be positive");
}

double ProbePulse::shape_at(double t) const {
  switch (shape) {
    case PulseShape::exponential_rising:
      return t <= 0.0 ? std::exp(t * std::numbers::ln2 / fwhm_s) : 0.0;
    case PulseShape::gaussian: {
      const double x = t / fwhm_s;
      return std::exp(-4.0 * std::numbers::ln2 * x * x);
    }
    case PulseShape::square:
      return (t >= -fwhm_s && t <= 0.0) ? 1.0 : 0.0;
  }
  return 0.0;
}

void ControlSchedule::validate() const {
  if (!(rabi_rad_per_s >= 0.0)) throw DomainError("control Rabi frequency must be >= 0");
  if (!(ramp_s >= 0.0)) throw DomainError("ramp time must be >= 0");
  if (storage && switch_on_s < switch_off_s + ramp_s) {
    throw DomainError("control must be fully off before it is switched back on");
  }
}

double ControlSchedule::envelope(double t) const {
  if (!storage) return 1.0;
  auto fall = [&](double t0) {
    if (t <= t0) return 1.0;
    if (ramp_s == 0.0 || t >= t0 + ramp_s) return 0.0;
    return 0.5 * (1.0 + std::cos(constants::pi * (t - t0) / ramp_s));
  };
  if (t < switch_on_s) return fall(switch_off_s);
  return 1.0 - fall(switch_on_s);
}

PropagationGrid PropagationGrid::refined() const {
  PropagationGrid g = *this;
  g.dt_s *= 0.5;
  g.nz *= 2;
  return g;
}

PropagationResult propagate_pulse(const PropagationCase& c) {
  validate_case(c);
  const auto& g = c.grid;
  const auto nt = static_cast<std::size_t>(std::llround((g.t_end_s - g.t_start_s) / g.dt_s));
  const auto nz = static_cast<std::size_t>(g.nz);
  const double h = g.dt_s;
  const double dz = 1.0 / static_cast<double>(nz);
  const double gamma = c.scheme.gamma_ge_rad_per_s;
  const double od = c.medium.od;
  const double delta = c.probe.detuning_rad_per_s;
  const double delta2 = delta + c.control.two_photon_offset_rad_per_s;
  const double omega = c.control.rabi_rad_per_s;
  const double omega_d =
      c.control.dephasing_rabi_rad_per_s < 0.0 ? omega : c.control.dephasing_rabi_rad_per_s;

  PropagationResult r;
  r.dt_s = h;
  r.transit_s = c.medium.length_m / constants::speed_of_light;
  r.readout_start_s = c.control.storage ? c.control.switch_on_s : g.t_end_s + h;
  r.time_s.resize(nt + 1);
  r.input_flux.resize(nt + 1);
  r.control_envelope.resize(nt + 1);
  for (std::size_t n = 0; n <= nt; ++n) {
    const double t = g.t_start_s + h * static_cast<double>(n);
    r.time_s[n] = t;
    r.input_flux[n] = c.probe.shape_at(t);
    r.control_envelope[n] = c.control.envelope(t);
  }
  double shape_sum = 0.0;
  for (double f : r.input_flux) shape_sum += f;
  if (!(shape_sum > 0.0)) throw DomainError("probe pulse lies outside the time grid");
  const double flux_scale = c.probe.mean_photon_number / (shape_sum * h);
  std::vector<double> e_in(nt + 1);
  for (std::size_t n = 0; n <= nt; ++n) {
    r.input_flux[n] *= flux_scale;
    e_in[n] = std::sqrt(r.input_flux[n]);
  }

  std::vector<complex> P(nz + 1), S(nz + 1), rhs(nz + 1);
  r.output_flux.assign(nt + 1, 0.0);
  r.output_flux[0] = r.input_flux[0];

  // Crank-Nicolson for dP/dtau = i (Gamma/2) E_in - (Gamma OD / 4) K P, where K is the
  // cumulative trapezoid integral in zeta. (I + bK) is lower triangular.
  const double b = h * gamma * od / 8.0;
  const complex field_coupling(0.0, 0.5 * od);  // E = E_in + i (OD/2) K P
  const double diag = 1.0 + 0.5 * b * dz;

  const double snapshot_time =
      c.control.storage ? c.control.switch_off_s + c.control.ramp_s : g.t_end_s;
  bool snapped = false;

  for (std::size_t n = 0; n < nt; ++n) {
    const double t_mid = r.time_s[n] + 0.5 * h;
    const double env = c.control.envelope(t_mid);
    const double om = omega * env;
    const double om_d = omega_d * env;
    const double g_s = c.scheme.effective_gamma_gs(om_d);
    const auto half = Propagator2::make(complex(-0.5 * gamma, delta), complex(0.0, 0.5 * om),
                                        complex(-g_s, delta2), 0.5 * h);

    for (std::size_t j = 0; j <= nz; ++j) half.apply(P[j], S[j]);

    // Explicit half: rhs = (I - bK) P + source.
    const complex source(0.0, 0.5 * gamma * h * 0.5 * (e_in[n] + e_in[n + 1]));
    {
      complex run = 0.0;  // sum_{i<j} P_i with half weight on P_0
      for (std::size_t j = 0; j <= nz; ++j) {
        const complex kp = (j == 0) ? complex(0.0) : dz * (run + 0.5 * P[j]);
        rhs[j] = P[j] - b * kp + source;
        run += (j == 0) ? 0.5 * P[j] : P[j];
      }
    }
    // Implicit half by forward substitution.
    {
      complex run = 0.0;
      P[0] = rhs[0];
      run = 0.5 * P[0];
      for (std::size_t j = 1; j <= nz; ++j) {
        P[j] = (rhs[j] - b * dz * run) / diag;
        run += P[j];
      }
    }

    for (std::size_t j = 0; j <= nz; ++j) half.apply(P[j], S[j]);

    // Output field at zeta = 1.
    complex kp_end = 0.5 * P[0] + 0.5 * P[nz];
    for (std::size_t j = 1; j < nz; ++j) kp_end += P[j];
    const complex e_out = e_in[n + 1] + field_coupling * dz * kp_end;
    r.output_flux[n + 1] = std::norm(e_out);

    if (!snapped && r.time_s[n + 1] >= snapshot_time) {
      r.spinwave = S;
      r.spinwave_time_s = r.time_s[n + 1];
      snapped = true;
    }
  }
  if (!snapped) {
    r.spinwave = S;
    r.spinwave_time_s = r.time_s.back();
  }
  r.z_m.resize(nz + 1);
  for (std::size_t j = 0; j <= nz; ++j) r.z_m[j] = c.medium.length_m * dz * static_cast<double>(j);

  double in_sum = 0.0, out_sum = 0.0, in_t = 0.0, out_t = 0.0, leak = 0.0, retrieved = 0.0;
  for (std::size_t n = 0; n <= nt; ++n) {
    in_sum += r.input_flux[n];
    out_sum += r.output_flux[n];
    in_t += r.time_s[n] * r.input_flux[n];
    out_t += r.time_s[n] * r.output_flux[n];
    if (r.time_s[n] < r.readout_start_s) {
      leak += r.output_flux[n];
    } else {
      retrieved += r.output_flux[n];
    }
  }
  r.input_photons = in_sum * h;
  r.output_photons = out_sum * h;
  r.transmission = checked_ratio(out_sum, in_sum);
  r.group_delay_s = (out_sum > 0.0) ? out_t / out_sum - in_t / in_sum : 0.0;
  r.leak_fraction = checked_ratio(leak, in_sum);
  r.retrieval_efficiency = checked_ratio(retrieved, in_sum);
  return r;
}

double storage_efficiency(const PropagationResult& result, double t1, double t2) {
  if (result.time_s.empty()) throw DomainError("empty propagation result");
  if (!(t2 > t1)) throw DomainError("empty read-out window");
  if (t1 < result.time_s.front() - 0.5 * result.dt_s ||
      t2 > result.time_s.back() + 0.5 * result.dt_s) {
    throw DomainError("read-out window outside the simulated span");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < result.time_s.size(); ++n) {
    den += result.input_flux[n];
    const double t = result.time_s[n];
    if (t >= t1 && t <= t2) num += result.output_flux[n];
  }
  return checked_ratio(num, den);
}

RefinementReport check_refinement(const PropagationCase& c, double tolerance) {
  PropagationCase fine = c;
  fine.grid = c.grid.refined();
  const auto a = propagate_pulse(c);
  const auto b = propagate_pulse(fine);
  RefinementReport rep;
  rep.coarse = c.control.storage ? a.retrieval_efficiency : a.transmission;
  rep.fine = c.control.storage ? b.retrieval_efficiency : b.transmission;
  const double scale = std::max(std::abs(rep.fine), 1e-300);
  rep.relative_change = std::abs(rep.fine - rep.coarse) / scale;
  rep.converged = rep.relative_change < tolerance;
  return rep;
}

std::vector<PropagationResult> propagate_batch(const std::vector<PropagationCase>& cases) {
  std::vector<PropagationResult> out(cases.size());
  std::vector<std::exception_ptr> errors(cases.size());
  const auto n = static_cast<long>(cases.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i);
    try {
      out[j] = propagate_pulse(cases[j]);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace serial {
std::vector<PropagationResult> propagate_batch(const std::vector<PropagationCase>& cases) {
  std::vector<PropagationResult> out;
  out.reserve(cases.size());
  for (const auto& c : cases) out.push_back(propagate_pulse(c));
  return out;
}
}  // namespace serial

}  // namespace nfmem::propagation
