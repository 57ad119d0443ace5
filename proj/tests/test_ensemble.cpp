#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "nfmem/ensemble.hpp"
#include "nfmem/error.hpp"

using namespace nfmem;
using ensemble::CloudSpec;
using ensemble::DensityModel;

TEST_CASE("uniform annulus atom number equals the closed-form area times length") {
  const CloudSpec cloud;
  const waveguide::FiberSpec fiber;
  for (double shell : {1.0, 2.0, 4.0}) {
    const double r = fiber.radius_m, R = r * (1 + shell);
    const double oracle = cloud.peak_density_per_m3 * M_PI * (R * R - r * r) * 5e-3;
    CHECK(ensemble::effective_atom_number(cloud, fiber, shell) ==
          doctest::Approx(oracle).epsilon(1e-12));
  }
  // n0 = 1e11 cm^-3, L = 5 mm, annulus of width 4r: 24 pi r^2 L n0.
  CHECK(ensemble::effective_atom_number(cloud, fiber, 4.0) ==
        doctest::Approx(1507.9644737).epsilon(1e-9));
  CHECK(ensemble::effective_atom_number(cloud, fiber, 0.0) == 0.0);
}

TEST_CASE("depleted density: zero at the surface, monotone, tends to n0") {
  CloudSpec cloud;
  cloud.model = DensityModel::vdw_depleted;
  const waveguide::FiberSpec fiber;
  const double r = fiber.radius_m;
  CHECK(ensemble::density_profile(cloud, fiber, r) == 0.0);
  double last = 0.0;
  for (double gap = 1e-9; gap < 2e-6; gap *= 1.3) {
    const double n = ensemble::density_profile(cloud, fiber, r + gap);
    CHECK(n >= last);
    last = n;
  }
  CHECK(ensemble::density_profile(cloud, fiber, r + 50e-6) ==
        doctest::Approx(cloud.peak_density_per_m3).epsilon(1e-6));
  // |U(x)| = k_B T at the capture length.
  const double xc = ensemble::capture_length(cloud);
  CHECK(cloud.c3_jm3 / (xc * xc * xc) == doctest::Approx(constants::boltzmann * 200e-6));
  CHECK(ensemble::density_profile(cloud, fiber, r + xc) ==
        doctest::Approx(cloud.peak_density_per_m3 * std::exp(-1.0)));
}

TEST_CASE("depleted atom number matches an independent adaptive quadrature") {
  CloudSpec cloud;
  cloud.model = DensityModel::vdw_depleted;
  const waveguide::FiberSpec fiber;
  const double r = fiber.radius_m, xc = ensemble::capture_length(cloud);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double integral = ts.integrate(
      [&](double rho) {
        const double g = rho - r;
        if (g <= 0.0) return 0.0;
        const double x = xc / g;
        return rho * std::exp(-x * x * x);
      },
      r, 5 * r);
  const double oracle = 2 * M_PI * cloud.peak_density_per_m3 * integral * 5e-3;
  const double n = ensemble::effective_atom_number(cloud, fiber, 4.0);
  CHECK(n == doctest::Approx(oracle).epsilon(1e-9));
  CloudSpec uniform;
  CHECK(n < ensemble::effective_atom_number(uniform, fiber, 4.0));
}

TEST_CASE("atom number from absorbed power") {
  CHECK(ensemble::atom_number_from_absorption(8e-9, 3.8e-12) ==
        doctest::Approx(2105.2631579).epsilon(1e-10));
  CHECK(ensemble::atom_number_from_absorption(0.0) == 0.0);
  CHECK_THROWS_AS(ensemble::atom_number_from_absorption(-1e-9), DomainError);
  CHECK_THROWS_AS(ensemble::atom_number_from_absorption(1e-9, 0.0), DomainError);
}

TEST_CASE("saturation law") {
  ensemble::AbsorptionModel m;
  CHECK(ensemble::saturation_transmission(0.0, m) == doctest::Approx(std::exp(-8.0 / 1.3)));
  CHECK(ensemble::saturation_transmission(m.p_sat_W, m) ==
        doctest::Approx(std::exp(-8.0 / 1.3 / 2.0)));
  CHECK(ensemble::saturation_transmission(1e-3, m) > 0.999);
  m.k_exp = 2.0;
  CHECK(ensemble::saturation_transmission(m.p_sat_W, m) ==
        doctest::Approx(std::exp(-8.0 / 1.3 / 4.0)));
  double last = 0.0;
  for (double p = 0.0; p < 50e-9; p += 1e-9) {
    const double t = ensemble::saturation_transmission(p, m);
    CHECK(t > last);
    last = t;
  }
  CHECK_THROWS_AS(ensemble::saturation_transmission(-1e-9, m), DomainError);
}

TEST_CASE("two-level Lorentzian transmission") {
  ensemble::AbsorptionModel m;
  CHECK(ensemble::lorentzian_transmission(0.0, m) == doctest::Approx(std::exp(-3.0)));
  CHECK(ensemble::lorentzian_transmission(0.5 * m.gamma_rad_per_s, m) ==
        doctest::Approx(std::exp(-1.5)));
  CHECK(ensemble::lorentzian_transmission(-0.5 * m.gamma_rad_per_s, m) ==
        ensemble::lorentzian_transmission(0.5 * m.gamma_rad_per_s, m));
}

TEST_CASE("cloud validation") {
  const waveguide::FiberSpec fiber;
  CloudSpec c;
  c.overlap_length_m = 10e-3;
  CHECK_THROWS_AS(ensemble::effective_atom_number(c, fiber, 4.0), DomainError);
  c = CloudSpec{};
  c.peak_density_per_m3 = 0.0;
  CHECK_THROWS_AS(ensemble::effective_atom_number(c, fiber, 4.0), DomainError);
  CHECK_THROWS_AS(ensemble::effective_atom_number(CloudSpec{}, fiber, -1.0), DomainError);
  CHECK_THROWS_AS(ensemble::density_profile(CloudSpec{}, fiber, 100e-9), DomainError);
}
