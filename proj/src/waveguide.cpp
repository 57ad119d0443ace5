#include "nfmem/waveguide.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "nfmem/error.hpp"

namespace nfmem::waveguide {
namespace {

constexpr double kBracketEps = 1e-9;
constexpr double kBisectionTol = 1e-12;
constexpr double kFirstZeroJ0 = 2.404825557695773;
// Cladding integration extends to q*(rho - a) = 45, where K1^2 ~ e^-90.
constexpr int kCladdingPanels = 45;

using Gauss = boost::math::quadrature::gauss<double, 30>;

struct Geometry {
  double k0;
  double beta;
  double u;  // core transverse wavenumber
  double w;  // cladding decay constant
};

Geometry geometry(const FiberSpec& s, double n_eff) {
  const double k0 = constants::two_pi / s.wavelength_m;
  const double beta = n_eff * k0;
  const double u = std::sqrt(std::max(0.0, k0 * k0 * s.n_core * s.n_core - beta * beta));
  const double w = std::sqrt(std::max(0.0, beta * beta - k0 * k0 * s.n_clad * s.n_clad));
  return {k0, beta, u, w};
}

double j1_prime(double x) { return std::cyl_bessel_j(0.0, x) - std::cyl_bessel_j(1.0, x) / x; }
double k1_prime(double x) { return -std::cyl_bessel_k(0.0, x) - std::cyl_bessel_k(1.0, x) / x; }

// J1(x)/rho with the rho -> 0 limit u/2.
double j1_over_rho(double u, double rho) {
  const double x = u * rho;
  if (x < 1e-8) return 0.5 * u;
  return std::cyl_bessel_j(1.0, x) / rho;
}

template <class F>
double integrate_radial(F&& flux, double radius, double decay, double& core_out,
                        double& clad_out) {
  constexpr int core_panels = 4;
  double core = 0.0;
  for (int p = 0; p < core_panels; ++p) {
    const double lo = radius * p / core_panels;
    const double hi = radius * (p + 1) / core_panels;
    core += Gauss::integrate([&](double r) { return flux(r) * r; }, lo, hi);
  }
  double clad = 0.0;
  for (int p = 0; p < kCladdingPanels; ++p) {
    const double lo = radius + p / decay;
    const double hi = radius + (p + 1) / decay;
    clad += Gauss::integrate([&](double r) { return flux(r) * r; }, lo, hi);
  }
  core_out = constants::two_pi * core;
  clad_out = constants::two_pi * clad;
  return core_out + clad_out;
}

}  // namespace

void FiberSpec::validate() const {
  if (!(radius_m > 0.0)) throw DomainError("fiber radius must be positive");
  if (!(wavelength_m > 0.0)) throw DomainError("wavelength must be positive");
  if (!(n_clad >= 1.0)) throw DomainError("cladding index must be >= 1");
  if (!(n_core > n_clad)) throw DomainError("core index must exceed cladding index");
}

double FiberSpec::v_number() const {
  return constants::two_pi * radius_m / wavelength_m *
         std::sqrt(n_core * n_core - n_clad * n_clad);
}

double characteristic(const FiberSpec& s, double n_eff) {
  const auto g = geometry(s, n_eff);
  const double a = s.radius_m;
  const double U = g.u * a;
  const double W = g.w * a;
  const double r = (s.n_clad * s.n_clad) / (s.n_core * s.n_core);
  const double J = j1_prime(U) / (U * std::cyl_bessel_j(1.0, U));
  const double K = k1_prime(W) / (W * std::cyl_bessel_k(1.0, W));
  const double ratio = g.beta / (g.k0 * s.n_core);
  const double sum = 1.0 / (U * U) + 1.0 / (W * W);
  const double R = ratio * ratio * sum * sum;
  const double half_diff = 0.5 * (1.0 - r) * K;
  return J + 0.5 * (1.0 + r) * K + std::sqrt(half_diff * half_diff + R);
}

GuidedMode solve_he11(const FiberSpec& spec) {
  spec.validate();
  const double k0 = constants::two_pi / spec.wavelength_m;
  const double V = spec.v_number();
  const double a = spec.radius_m;

  // HE11 has U in (0, min(V, j01)); outside that window J1 poles and higher branches appear.
  const double u_max = std::min(V, kFirstZeroJ0);
  double lo = std::sqrt(spec.n_core * spec.n_core - std::pow(u_max / (a * k0), 2));
  lo = std::max(lo, spec.n_clad) + kBracketEps;
  double hi = spec.n_core - kBracketEps;
  if (!(lo < hi)) throw SolverError("no HE11 bracket: fiber index contrast too small");

  double f_lo = characteristic(spec, lo);
  double f_hi = characteristic(spec, hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    throw SolverError("no HE11 root found for radius " + std::to_string(a) +
                      " m (mode indistinguishable from cladding)");
  }

  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = characteristic(spec, mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if (fm < 0.0) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
      f_hi = fm;
    }
  }

  // Secant polish inside the final bracket.
  double x0 = lo, x1 = hi, f0 = f_lo, f1 = f_hi;
  double best = (std::abs(f0) < std::abs(f1)) ? x0 : x1;
  double best_res = std::min(std::abs(f0), std::abs(f1));
  for (int it = 0; it < 8 && f1 != f0; ++it) {
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    if (!(x2 > spec.n_clad && x2 < spec.n_core)) break;
    const double f2 = characteristic(spec, x2);
    if (std::abs(f2) < best_res) {
      best = x2;
      best_res = std::abs(f2);
    }
    if (f2 == 0.0 || x2 == x1) break;
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = f2;
  }

  GuidedMode mode;
  mode.spec_ = spec;
  mode.n_eff = best;
  mode.residual = best_res;
  mode.v_number = V;
  mode.multimode = V >= kFirstZeroJ0;

  const auto g = geometry(spec, best);
  mode.beta_per_m = g.beta;
  mode.core_wavenumber_per_m = g.u;
  mode.decay_constant_per_m = g.w;

  // Continuity of E_z, H_z and E_phi at rho = a fixes the amplitudes (E_z core = 1).
  const double U = g.u * a;
  const double W = g.w * a;
  const double omega = k0 * constants::speed_of_light;
  const double mu0 = constants::vacuum_permeability;
  const double j1 = std::cyl_bessel_j(1.0, U);
  const double k1 = std::cyl_bessel_k(1.0, W);
  const double denom = a * omega * mu0 * (j1_prime(U) / g.u + j1 * k1_prime(W) / (g.w * k1));
  ModeAmplitudes amp;
  amp.ez_core = 1.0;
  amp.hz_core = -g.beta * j1 * (1.0 / (g.u * g.u) + 1.0 / (g.w * g.w)) / denom;
  amp.ez_clad = j1 / k1;
  amp.hz_clad = amp.hz_core * j1 / k1;
  mode.amp_ = amp;

  double core = 0.0, clad = 0.0;
  const double total = integrate_radial([&](double r) { return mode.raw_flux(r); }, a, g.w,
                                        core, clad);
  mode.norm_ = 1.0 / total;
  mode.evanescent_fraction = clad / total;
  return mode;
}

double GuidedMode::raw_flux(double rho) const {
  const double k0 = constants::two_pi / spec_.wavelength_m;
  const double omega = k0 * constants::speed_of_light;
  const double mu0 = constants::vacuum_permeability;
  const double eps0 = 1.0 / (mu0 * constants::speed_of_light * constants::speed_of_light);
  const double beta = beta_per_m;

  double kappa2, z_over_rho, zp, eps, ea, hb;
  if (rho < spec_.radius_m) {
    const double u = core_wavenumber_per_m;
    kappa2 = u * u;
    z_over_rho = j1_over_rho(u, rho);
    zp = u * (rho > 0.0 ? j1_prime(u * rho) : 0.5);
    eps = eps0 * spec_.n_core * spec_.n_core;
    ea = amp_.ez_core;
    hb = amp_.hz_core;
  } else {
    const double w = decay_constant_per_m;
    if (w * rho > 700.0) return 0.0;  // K1^2 underflows; libstdc++ throws here
    kappa2 = -w * w;
    z_over_rho = std::cyl_bessel_k(1.0, w * rho) / rho;
    zp = w * k1_prime(w * rho);
    eps = eps0 * spec_.n_clad * spec_.n_clad;
    ea = amp_.ez_clad;
    hb = amp_.hz_clad;
  }
  // Radial parts of the transverse fields (common factor i dropped).
  const double e_r = (beta * ea * zp + omega * mu0 * hb * z_over_rho) / kappa2;
  const double e_phi = (-beta * ea * z_over_rho - omega * mu0 * hb * zp) / kappa2;
  const double h_r = (beta * hb * zp + omega * eps * ea * z_over_rho) / kappa2;
  const double h_phi = (beta * hb * z_over_rho + omega * eps * ea * zp) / kappa2;
  return 0.25 * (e_r * h_phi - e_phi * h_r);
}

double GuidedMode::intensity(double rho_m) const {
  if (rho_m < 0.0) throw DomainError("radial coordinate must be non-negative");
  return norm_ * raw_flux(rho_m);
}

double mode_intensity(const GuidedMode& mode, double rho_m) { return mode.intensity(rho_m); }

double evanescent_fraction(const GuidedMode& mode, const FiberSpec& spec) {
  const auto& own = mode.fiber();
  if (own.radius_m != spec.radius_m || own.wavelength_m != spec.wavelength_m ||
      own.n_core != spec.n_core || own.n_clad != spec.n_clad) {
    throw DomainError("mode was not solved for this fiber");
  }
  double core = 0.0, clad = 0.0;
  const double total = integrate_radial([&](double r) { return mode.intensity(r); },
                                        spec.radius_m, mode.decay_constant_per_m, core, clad);
  return clad / total;
}

namespace {

std::optional<ScanPoint> scan_one(double wavelength, double diameter, double power, double n_core,
                                  double n_clad) {
  FiberSpec spec{diameter / 2.0, wavelength, n_core, n_clad};
  try {
    const auto mode = solve_he11(spec);
    return ScanPoint{diameter, power * mode.surface_intensity(), mode.n_eff,
                     mode.evanescent_fraction};
  } catch (const SolverError&) {
    return std::nullopt;
  }
}

SurfaceScan finish_scan(const std::vector<std::optional<ScanPoint>>& raw) {
  SurfaceScan scan;
  for (const auto& p : raw) {
    if (p) scan.points.push_back(*p);
  }
  if (scan.points.empty()) throw DomainError("empty scan: no diameter supports a guided mode");
  const auto it = std::max_element(scan.points.begin(), scan.points.end(),
                                   [](const ScanPoint& l, const ScanPoint& r) {
                                     return l.surface_intensity_w_per_m2 <
                                            r.surface_intensity_w_per_m2;
                                   });
  const auto i = static_cast<std::size_t>(it - scan.points.begin());
  scan.argmax_diameter_m = it->diameter_m;
  scan.refined_argmax_diameter_m = it->diameter_m;
  if (i > 0 && i + 1 < scan.points.size()) {
    const double x0 = scan.points[i - 1].diameter_m, x1 = it->diameter_m,
                 x2 = scan.points[i + 1].diameter_m;
    const double y0 = scan.points[i - 1].surface_intensity_w_per_m2,
                 y1 = it->surface_intensity_w_per_m2,
                 y2 = scan.points[i + 1].surface_intensity_w_per_m2;
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if (den != 0.0) scan.refined_argmax_diameter_m = x1 - 0.5 * num / den;
  }
  return scan;
}

void check_scan_inputs(double wavelength, double power) {
  if (!(wavelength > 0.0)) throw DomainError("wavelength must be positive");
  if (!(power > 0.0)) throw DomainError("guided power must be positive");
}

}  // namespace

SurfaceScan surface_intensity_scan(double wavelength_m, const std::vector<double>& diameters_m,
                                   double power_w, double n_core, double n_clad) {
  check_scan_inputs(wavelength_m, power_w);
  std::vector<std::optional<ScanPoint>> raw(diameters_m.size());
  const auto n = static_cast<long>(diameters_m.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    raw[static_cast<std::size_t>(i)] =
        scan_one(wavelength_m, diameters_m[static_cast<std::size_t>(i)], power_w, n_core, n_clad);
  }
  return finish_scan(raw);
}

namespace serial {

SurfaceScan surface_intensity_scan(double wavelength_m, const std::vector<double>& diameters_m,
                                   double power_w, double n_core, double n_clad) {
  check_scan_inputs(wavelength_m, power_w);
  std::vector<std::optional<ScanPoint>> raw;
  raw.reserve(diameters_m.size());
  for (double d : diameters_m) raw.push_back(scan_one(wavelength_m, d, power_w, n_core, n_clad));
  return finish_scan(raw);
}

}  // namespace serial
}  // namespace nfmem::waveguide
