#include "nfmem/ensemble.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "nfmem/error.hpp"

namespace nfmem::ensemble {

void CloudSpec::validate() const {
  if (!(peak_density_per_m3 > 0.0)) throw DomainError("peak density must be positive");
  if (!(temperature_K > 0.0)) throw DomainError("temperature must be positive");
  if (!(overlap_length_m > 0.0)) throw DomainError("overlap length must be positive");
  if (overlap_length_m > kNanofiberWaistLength_m) {
    throw DomainError("overlap length exceeds the 9 mm nanofiber waist");
  }
  if (!(c3_jm3 >= 0.0)) throw DomainError("C3 must be non-negative");
}

double capture_length(const CloudSpec& cloud) {
  return std::cbrt(cloud.c3_jm3 / (constants::boltzmann * cloud.temperature_K));
}

double density_profile(const CloudSpec& cloud, const waveguide::FiberSpec& fiber, double rho_m) {
  if (rho_m < fiber.radius_m) throw DomainError("density requested inside the fiber");
  if (cloud.model == DensityModel::uniform || cloud.c3_jm3 == 0.0) {
    return cloud.peak_density_per_m3;
  }
  const double gap = rho_m - fiber.radius_m;
  if (gap == 0.0) return 0.0;
  const double x = capture_length(cloud) / gap;
  return cloud.peak_density_per_m3 * std::exp(-x * x * x);
}

double effective_atom_number(const CloudSpec& cloud, const waveguide::FiberSpec& fiber,
                             double shell_width_in_radii) {
  cloud.validate();
  fiber.validate();
  if (shell_width_in_radii < 0.0) throw DomainError("shell width must be non-negative");
  if (shell_width_in_radii == 0.0) return 0.0;

  const double r = fiber.radius_m;
  const double outer = r * (1.0 + shell_width_in_radii);
  // 64 equal panels resolve the capture shell (tens of nm) for shells of a few radii.
  constexpr int panels = 64;
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = r + (outer - r) * p / panels;
    const double hi = r + (outer - r) * (p + 1) / panels;
    sum += Gauss::integrate(
        [&](double rho) { return density_profile(cloud, fiber, rho) * rho; }, lo, hi);
  }
  return constants::two_pi * sum * cloud.overlap_length_m;
}

double atom_number_from_absorption(double p_abs_W, double p_single_W) {
  if (!(p_single_W > 0.0)) throw DomainError("single-atom power must be positive");
  if (p_abs_W < 0.0) throw DomainError("absorbed power must be non-negative");
  return p_abs_W / p_single_W;
}

double saturation_transmission(double power_W, const AbsorptionModel& model) {
  if (power_W < 0.0) throw DomainError("power must be non-negative");
  return std::exp(-model.alpha0_L / std::pow(1.0 + power_W / model.p_sat_W, model.k_exp));
}

double lorentzian_transmission(double detuning_rad_per_s, const AbsorptionModel& model) {
  const double x = 2.0 * detuning_rad_per_s / model.gamma_rad_per_s;
  return std::exp(-model.od / (1.0 + x * x));
}

}  // namespace nfmem::ensemble
