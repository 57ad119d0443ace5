#include "nfmem/eit.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "nfmem/error.hpp"

namespace nfmem::eit {
namespace {

double delay_closed_form(double od, double gamma_ge, double g, double rabi) {
  const double q = 0.25 * rabi * rabi;
  const double d0 = 0.5 * gamma_ge * g + q;
  return 0.5 * od * 0.5 * gamma_ge * (q - g * g) / (d0 * d0);
}

template <class F>
double log_bisect(F&& f, double lo, double hi, const char* what) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw SolverError(std::string("calibration: ") + what);
  auto g = [&](double x) { return f(std::exp(x)); };
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::bisect(g, std::log(lo), std::log(hi), tol, iters);
  return std::exp(0.5 * (r.first + r.second));
}

}  // namespace

void LambdaScheme::validate() const {
  if (!(gamma_ge_rad_per_s > 0.0)) throw DomainError("excited-state linewidth must be positive");
  if (!(gamma_gs_rad_per_s >= 0.0)) throw DomainError("ground-state decay must be >= 0");
  if (!(control_dephasing_s >= 0.0)) throw DomainError("control dephasing must be >= 0");
  if (!(wavelength_m > 0.0)) throw DomainError("wavelength must be positive");
}

double LambdaScheme::effective_gamma_gs(double rabi) const {
  return gamma_gs_rad_per_s + control_dephasing_s * rabi * rabi;
}

bool LambdaScheme::decoherence_dominant(double rabi) const {
  return effective_gamma_gs(rabi) > 0.1 * gamma_ge_rad_per_s;
}

complex susceptibility(double delta, const LambdaScheme& scheme, double rabi) {
  const double gamma = scheme.gamma_ge_rad_per_s;
  const double g = scheme.effective_gamma_gs(rabi);
  const complex num = complex(0.0, 0.5 * gamma) * complex(g, -delta);
  const complex den = complex(0.5 * gamma, -delta) * complex(g, -delta) + 0.25 * rabi * rabi;
  return num / den;
}

std::vector<double> eit_spectrum(double od, const LambdaScheme& scheme, double rabi,
                                 const std::vector<double>& grid) {
  if (!(od > 0.0)) throw DomainError("optical depth must be positive");
  scheme.validate();
  std::vector<double> out(grid.size());
  const auto n = static_cast<long>(grid.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i);
    out[j] = std::exp(-od * susceptibility(grid[j], scheme, rabi).imag());
  }
  return out;
}

namespace serial {
std::vector<double> eit_spectrum(double od, const LambdaScheme& scheme, double rabi,
                                 const std::vector<double>& grid) {
  if (!(od > 0.0)) throw DomainError("optical depth must be positive");
  scheme.validate();
  std::vector<double> out;
  out.reserve(grid.size());
  for (double d : grid) out.push_back(std::exp(-od * susceptibility(d, scheme, rabi).imag()));
  return out;
}
}  // namespace serial

GroupDelay group_delay(double od, const LambdaScheme& scheme, double rabi, double length_m) {
  if (!(od >= 0.0)) throw DomainError("optical depth must be non-negative");
  if (!(length_m > 0.0)) throw DomainError("medium length must be positive");
  if (!(rabi > 0.0)) throw DomainError("group delay needs a control field (Omega_c > 0)");
  scheme.validate();
  const double g = scheme.effective_gamma_gs(rabi);
  GroupDelay out;
  out.delay_s = delay_closed_form(od, scheme.gamma_ge_rad_per_s, g, rabi);
  out.slowdown = constants::speed_of_light * out.delay_s / length_m;
  out.window_open = 0.25 * rabi * rabi > g * g;
  return out;
}

double rabi_from_power(const ControlField& field, double calibration) {
  if (!(field.power_W >= 0.0)) throw DomainError("control power must be non-negative");
  if (!(field.waist_m > 0.0)) throw DomainError("control waist must be positive");
  const double intensity = 2.0 * field.power_W / (constants::pi * field.waist_m * field.waist_m);
  return calibration * constants::cs_natural_linewidth *
         std::sqrt(intensity / (2.0 * constants::cs_d2_saturation_intensity));
}

LambdaScheme Calibration::apply(LambdaScheme scheme) const {
  scheme.gamma_gs_rad_per_s = gamma_gs_rad_per_s;
  scheme.control_dephasing_s = control_dephasing_s;
  return scheme;
}

Calibration calibrate(const CalibrationAnchors& a, double gamma_ge, DephasingModel model,
                      double gamma_dark) {
  if (!(a.transparency > 0.0 && a.transparency < 1.0)) {
    throw DomainError("anchor transparency must lie in (0,1)");
  }
  if (!(a.od > 0.0 && a.delay_s > 0.0 && a.transparency_power_W > 0.0 &&
        a.delay_power_W > 0.0 && a.waist_m > 0.0 && gamma_ge > 0.0)) {
    throw DomainError("calibration anchors must be positive");
  }
  if (gamma_dark < 0.0) throw DomainError("dark ground-state decay must be >= 0");

  // Target Im chi(0) at the transparency anchor.
  const double target = -std::log(a.transparency) / a.od;
  const double power_ratio = a.delay_power_W / a.transparency_power_W;

  Calibration cal;
  cal.model = model;
  double rabi_anchor = 0.0;

  if (model == DephasingModel::constant) {
    auto rabi_for = [&](double g) {
      return std::sqrt(4.0 * 0.5 * gamma_ge * g * (1.0 / target - 1.0));
    };
    auto residual = [&](double g) {
      const double rabi2 = rabi_for(g) * std::sqrt(power_ratio);
      return delay_closed_form(a.od, gamma_ge, g, rabi2) - a.delay_s;
    };
    const double g = log_bisect(residual, 1.0, gamma_ge, "no constant ground-state decay fits");
    cal.gamma_gs_rad_per_s = g;
    cal.control_dephasing_s = 0.0;
    rabi_anchor = rabi_for(g);
  } else {
    // gamma at the transparency anchor, as a function of its Rabi frequency.
    auto gamma_at = [&](double rabi) {
      return target * rabi * rabi / (2.0 * gamma_ge * (1.0 - target));
    };
    auto kappa_for = [&](double rabi) { return (gamma_at(rabi) - gamma_dark) / (rabi * rabi); };
    auto residual = [&](double rabi) {
      const double kappa = kappa_for(rabi);
      const double rabi2 = rabi * std::sqrt(power_ratio);
      const double g2 = gamma_dark + kappa * rabi2 * rabi2;
      return delay_closed_form(a.od, gamma_ge, g2, rabi2) - a.delay_s;
    };
    // kappa >= 0 requires gamma_at(rabi) >= gamma_dark.
    const double rabi_min =
        std::max(std::sqrt(2.0 * gamma_ge * (1.0 - target) * gamma_dark / target), 1.0) *
        (1.0 + 1e-12);
    const double rabi = log_bisect(residual, rabi_min, 1e3 * gamma_ge,
                                   "no control-induced dephasing fits the anchors");
    cal.gamma_gs_rad_per_s = gamma_dark;
    cal.control_dephasing_s = kappa_for(rabi);
    rabi_anchor = rabi;
  }

  const ControlField unit_field{a.transparency_power_W, a.waist_m, 0.0};
  cal.rabi_factor = rabi_anchor / rabi_from_power(unit_field, 1.0);
  return cal;
}

}  // namespace nfmem::eit
