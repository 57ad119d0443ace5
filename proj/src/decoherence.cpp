#include "nfmem/decoherence.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <complex>

#include "nfmem/error.hpp"

namespace nfmem::decoherence {

using constants::infinity;

void DecoherenceParams::validate() const {
  if (!(temperature_K > 0.0)) throw DomainError("temperature must be positive");
  if (!(atom_mass_kg > 0.0)) throw DomainError("atom mass must be positive");
  if (!(fiber_radius_m > 0.0)) throw DomainError("fiber radius must be positive");
  if (!(wavelength_m > 0.0)) throw DomainError("wavelength must be positive");
  if (!(control_angle_rad >= 0.0 && control_angle_rad < constants::pi)) {
    throw DomainError("control angle must lie in [0, pi)");
  }
  if (!(zeeman_broadening_Hz >= 0.0)) throw DomainError("Zeeman broadening must be >= 0");
  if (tau_T_s < 0.0 || tau_D_s < 0.0) throw DomainError("lifetimes must be >= 0");
}

Lifetimes resolve_lifetimes(const DecoherenceParams& p) {
  p.validate();
  Lifetimes l;
  l.velocity_m_per_s = thermal_velocity(p.temperature_K, p.atom_mass_kg);
  l.tau1_s = transit_time(p.fiber_radius_m, l.velocity_m_per_s);
  l.tau2_s = motional_dephasing_time(p.wavelength_m, p.control_angle_rad, l.velocity_m_per_s);
  l.tau3_s = zeeman_dephasing_time(p.zeeman_broadening_Hz);
  l.tau_T_s = p.tau_T_s > 0.0 ? p.tau_T_s : l.tau1_s;
  l.tau_D_s = p.tau_D_s > 0.0 ? p.tau_D_s : combined_dephasing(l.tau2_s, l.tau3_s);
  return l;
}

double thermal_velocity(double temperature_K, double mass_kg) {
  if (!(temperature_K >= 0.0) || !(mass_kg > 0.0)) {
    throw DomainError("temperature must be >= 0 and mass > 0");
  }
  return std::sqrt(constants::boltzmann * temperature_K / mass_kg);
}

double transit_time(double radius_m, double v) {
  if (!(radius_m > 0.0)) throw DomainError("radius must be positive");
  if (!(v >= 0.0)) throw DomainError("velocity must be >= 0");
  if (v == 0.0) return infinity;
  return 2.0 * radius_m / v;
}

double motional_dephasing_time(double wavelength_m, double angle_rad, double v) {
  if (!(wavelength_m > 0.0)) throw DomainError("wavelength must be positive");
  if (!(angle_rad >= 0.0 && angle_rad < constants::pi)) {
    throw DomainError("angle must lie in [0, pi)");
  }
  if (!(v >= 0.0)) throw DomainError("velocity must be >= 0");
  const double rate = 4.0 * constants::pi / wavelength_m * std::sin(0.5 * angle_rad) * v;
  return rate > 0.0 ? 1.0 / rate : infinity;
}

double zeeman_dephasing_time(double broadening_Hz) {
  if (!(broadening_Hz >= 0.0)) throw DomainError("broadening must be >= 0");
  return broadening_Hz > 0.0 ? 1.0 / broadening_Hz : infinity;
}

double combined_dephasing(double tau2, double tau3) {
  if (!(tau2 > 0.0) || !(tau3 > 0.0)) throw DomainError("dephasing times must be positive");
  const double inv2 = 1.0 / (tau2 * tau2) + 1.0 / (tau3 * tau3);
  return inv2 > 0.0 ? 1.0 / std::sqrt(inv2) : infinity;
}

double efficiency_decay(double t, double tau_D, double tau_T) {
  if (!(t >= 0.0)) throw DomainError("storage time must be >= 0");
  if (!(tau_D > 0.0) || !(tau_T > 0.0)) throw DomainError("lifetimes must be positive");
  const double x = t / tau_T;
  const double loss = 1.0 + x * x;
  const double y = t / tau_D;
  return std::exp(-(y * y) / loss) / (loss * loss);
}

double larmor_frequency(double b_field_T, double g_f) {
  return std::abs(g_f) * constants::bohr_magneton * b_field_T / constants::planck;
}

double half_larmor_period(double b_field_T, double g_f) {
  if (!(b_field_T > 0.0)) throw DomainError("magnetic field must be positive");
  if (g_f == 0.0) throw DomainError("Lande factor must be non-zero");
  return 1.0 / (2.0 * larmor_frequency(b_field_T, g_f));
}

std::vector<std::pair<int, double>> MagneticScenario::flat_populations(int m_max) {
  std::vector<std::pair<int, double>> out;
  const double w = 1.0 / (2 * m_max + 1);
  for (int m = -m_max; m <= m_max; ++m) out.emplace_back(m, w);
  return out;
}

void MagneticScenario::validate() const {
  if (!(b_field_T >= 0.0)) throw DomainError("magnetic field must be >= 0");
  if (m_populations.empty()) throw DomainError("population list is empty");
  double sum = 0.0;
  for (const auto& [m, w] : m_populations) {
    if (!(w >= 0.0)) throw DomainError("populations must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("populations must sum to 1");
}

double interference_factor(double t, const MagneticScenario& s) {
  const double nu = larmor_frequency(s.b_field_T, s.g_f);
  std::complex<double> acc = 0.0;
  for (const auto& [m, w] : s.m_populations) {
    const double phase = constants::two_pi * (2.0 * m + s.delta_m) * nu * t;
    acc += w * std::polar(1.0, phase);
  }
  return std::norm(acc);
}

std::vector<double> revival_envelope(const std::vector<double>& t_grid,
                                     const MagneticScenario& scenario,
                                     const DecoherenceParams& params) {
  scenario.validate();
  const auto life = resolve_lifetimes(params);
  std::vector<double> out(t_grid.size());
  const auto n = static_cast<long>(t_grid.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i);
    out[j] = interference_factor(t_grid[j], scenario) *
             efficiency_decay(t_grid[j], life.tau_D_s, life.tau_T_s);
  }
  return out;
}

namespace serial {
std::vector<double> revival_envelope(const std::vector<double>& t_grid,
                                     const MagneticScenario& scenario,
                                     const DecoherenceParams& params) {
  scenario.validate();
  const auto life = resolve_lifetimes(params);
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    out.push_back(interference_factor(t, scenario) *
                  efficiency_decay(t, life.tau_D_s, life.tau_T_s));
  }
  return out;
}
}  // namespace serial

std::vector<double> find_peaks(const std::vector<double>& t, const std::vector<double>& y,
                               double threshold) {
  if (t.size() != y.size()) throw DomainError("peak search: size mismatch");
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1]) || y[i] < threshold) continue;
    const double den = y[i - 1] - 2.0 * y[i] + y[i + 1];
    double shift = 0.0;
    if (den != 0.0) shift = 0.5 * (y[i - 1] - y[i + 1]) / den;
    const double step = 0.5 * (t[i + 1] - t[i - 1]);
    peaks.push_back(t[i] + shift * step);
  }
  return peaks;
}

Revivals find_revivals(const std::vector<double>& t_grid, const MagneticScenario& scenario,
                       const DecoherenceParams& params) {
  scenario.validate();
  Revivals out;
  if (scenario.b_field_T == 0.0) return out;

  std::vector<double> comb;
  comb.reserve(t_grid.size());
  for (double t : t_grid) comb.push_back(interference_factor(t, scenario));
  // Full rephasing returns the comb to exactly 1; partial rephasings of a lopsided ladder can
  // also be local maxima, so each candidate is polished on the exact comb and kept only if it
  // reaches 1. A single populated level has no structure and fails the strict-rise test.
  // Brent's absolute tolerance needs an O(1) variable: work in units of the half period.
  const double unit = half_larmor_period(scenario.b_field_T, scenario.g_f);
  auto neg_comb = [&](double u) { return -interference_factor(u * unit, scenario); };
  for (std::size_t i = 1; i + 1 < comb.size(); ++i) {
    if (t_grid[i] <= 0.0 || !(comb[i] > comb[i - 1] && comb[i] >= comb[i + 1])) continue;
    std::uintmax_t iters = 100;
    const auto [up, fp] = boost::math::tools::brent_find_minima(
        neg_comb, t_grid[i - 1] / unit, t_grid[i + 1] / unit, 40, iters);
    if (-fp >= 1.0 - 1e-9) out.rephasing_times_s.push_back(up * unit);
  }

  const auto env = revival_envelope(t_grid, scenario, params);
  const double quarter = 0.25 * half_larmor_period(scenario.b_field_T, scenario.g_f);
  for (double tr : out.rephasing_times_s) {
    std::vector<double> tt, yy;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      if (std::abs(t_grid[i] - tr) <= quarter) {
        tt.push_back(t_grid[i]);
        yy.push_back(env[i]);
      }
    }
    // Highest local maximum: the main lobe, not a sidelobe lifted by the decay.
    std::size_t best = 0;
    bool found = false;
    for (std::size_t i = 1; i + 1 < yy.size(); ++i) {
      if (yy[i] > yy[i - 1] && yy[i] >= yy[i + 1] && (!found || yy[i] > yy[best])) {
        best = i;
        found = true;
      }
    }
    if (found) {
      const std::vector<double> t3(tt.begin() + static_cast<long>(best) - 1,
                                   tt.begin() + static_cast<long>(best) + 2);
      const std::vector<double> y3(yy.begin() + static_cast<long>(best) - 1,
                                   yy.begin() + static_cast<long>(best) + 2);
      out.envelope_peaks_s.push_back(find_peaks(t3, y3, 0.0).front());
    }
  }
  return out;
}

}  // namespace nfmem::decoherence
