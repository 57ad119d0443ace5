#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "nfmem/ensemble.hpp"
#include "nfmem/eit.hpp"
#include "nfmem/error.hpp"

using namespace nfmem;
using eit::complex;
using eit::LambdaScheme;

namespace {

constexpr double kMHz = 2 * M_PI * 1e6;

// Steady state of the weak-probe Bloch equations for unit probe field:
//   0 = -(G/2 - i d) P + i (G/2) + i (W/2) S
//   0 = -(g - i d) S + i (W/2) P
complex steady_state_polarization(double d, double G, double g, double W) {
  Eigen::Matrix2cd A;
  A << complex(-0.5 * G, d), complex(0.0, 0.5 * W), complex(0.0, 0.5 * W), complex(-g, d);
  Eigen::Vector2cd b(complex(0.0, -0.5 * G), complex(0.0, 0.0));
  const Eigen::Vector2cd x = A.partialPivLu().solve(b);
  return x[0];
}

std::vector<double> grid(double span, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(-span + 2 * span * i / (n - 1));
  return g;
}

LambdaScheme scheme_with(double gamma_gs, double kappa = 0.0) {
  LambdaScheme s;
  s.gamma_gs_rad_per_s = gamma_gs;
  s.control_dephasing_s = kappa;
  return s;
}

}  // namespace

TEST_CASE("susceptibility equals the steady state of the Bloch equations") {
  const auto s = scheme_with(2e5, 1.2e-9);
  for (double W : {0.0, 3 * kMHz, 12 * kMHz}) {
    for (double d : grid(30 * kMHz, 61)) {
      const complex chi = eit::susceptibility(d, s, W);
      const complex oracle = steady_state_polarization(d, s.gamma_ge_rad_per_s,
                                                       s.effective_gamma_gs(W), W);
      CHECK(std::abs(chi - oracle) < 1e-12 * std::max(1.0, std::abs(oracle)));
    }
  }
}

TEST_CASE("without control the EIT spectrum is the two-level Lorentzian") {
  const auto s = scheme_with(4e6);
  const auto d = grid(40 * kMHz, 401);
  const auto t = eit::eit_spectrum(3.0, s, 0.0, d);
  ensemble::AbsorptionModel m;
  m.od = 3.0;
  m.gamma_rad_per_s = s.gamma_ge_rad_per_s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(std::abs(t[i] - ensemble::lorentzian_transmission(d[i], m)) < 1e-12);
  }
  CHECK(eit::susceptibility(0.0, s, 0.0).imag() == doctest::Approx(1.0));
}

TEST_CASE("EIT spectrum: passivity, symmetry, transparency") {
  const auto s = scheme_with(2e5);
  const auto d = grid(30 * kMHz, 301);
  const auto t = eit::eit_spectrum(3.0, s, 10 * kMHz, d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(t[i] <= 1.0);
    CHECK(t[i] > 0.0);
    CHECK(t[i] == doctest::Approx(t[d.size() - 1 - i]).epsilon(1e-12));
  }
  // Transparency at resonance beats absorption at the Autler-Townes dips.
  CHECK(t[150] > 0.9);
  CHECK(*std::min_element(t.begin(), t.end()) < 0.1);
  // gamma_gs = 0: perfect transparency.
  CHECK(eit::eit_spectrum(3.0, scheme_with(0.0), 5 * kMHz, {0.0})[0] ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("EIT spectrum: parallel kernel reproduces the serial reference exactly") {
  const auto s = scheme_with(2e5, 1.2e-9);
  const auto d = grid(30 * kMHz, 2001);
  const auto par = eit::eit_spectrum(3.0, s, 8 * kMHz, d);
  const auto ser = eit::serial::eit_spectrum(3.0, s, 8 * kMHz, d);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(par[i] == ser[i]);
}

TEST_CASE("group delay equals (OD/2) dRe chi/d delta at resonance") {
  for (double g : {0.0, 2e5, 4e6}) {
    const auto s = scheme_with(g, 1.2e-9);
    const double W = 6.5 * kMHz;
    const double h = 1e3;
    const double dchi = (eit::susceptibility(h, s, W).real() -
                         eit::susceptibility(-h, s, W).real()) / (2 * h);
    const auto gd = eit::group_delay(3.0, s, W, 5e-3);
    CHECK(gd.delay_s == doctest::Approx(1.5 * dchi).epsilon(1e-6));
    CHECK(gd.slowdown == doctest::Approx(299792458.0 * gd.delay_s / 5e-3));
  }
  // Ideal EIT: delay = OD Gamma / (2 Omega^2) * 2 = 2 OD (Gamma/2) / Omega^2.
  const auto ideal = eit::group_delay(3.0, scheme_with(0.0), 6.5 * kMHz, 5e-3);
  CHECK(ideal.delay_s ==
        doctest::Approx(3.0 * constants::cs_fitted_linewidth / std::pow(6.5 * kMHz, 2)));
  CHECK(ideal.window_open);
}

TEST_CASE("group delay: closed window and invalid control") {
  const auto s = scheme_with(5 * kMHz);
  const auto gd = eit::group_delay(3.0, s, 2 * kMHz, 5e-3);
  CHECK_FALSE(gd.window_open);
  CHECK(gd.delay_s < 0.0);
  CHECK_THROWS_AS(eit::group_delay(3.0, s, 0.0, 5e-3), DomainError);
  CHECK_THROWS_AS(eit::group_delay(3.0, s, 1e6, 0.0), DomainError);
  CHECK_THROWS_AS(eit::eit_spectrum(0.0, s, 1e6, {0.0}), DomainError);
  auto bad = s;
  bad.gamma_ge_rad_per_s = 0.0;
  CHECK_THROWS_AS(eit::eit_spectrum(3.0, bad, 1e6, {0.0}), DomainError);
}

TEST_CASE("Rabi frequency from control power") {
  const eit::ControlField f{1e-3, 400e-6, 0.0};
  const double I = 2 * 1e-3 / (M_PI * 400e-6 * 400e-6);
  CHECK(eit::rabi_from_power(f, 1.0) ==
        doctest::Approx(2 * M_PI * 5.2e6 * std::sqrt(I / (2 * 11.049))).epsilon(1e-12));
  const eit::ControlField f4{4e-3, 400e-6, 0.0};
  CHECK(eit::rabi_from_power(f4, 0.3) == doctest::Approx(2 * eit::rabi_from_power(f, 0.3)));
  CHECK(eit::rabi_from_power({0.0, 400e-6, 0.0}, 1.0) == 0.0);
  CHECK_THROWS_AS(eit::rabi_from_power({-1e-3, 400e-6, 0.0}, 1.0), DomainError);
  CHECK_THROWS_AS(eit::rabi_from_power({1e-3, 0.0, 0.0}, 1.0), DomainError);
}

TEST_CASE("calibration reproduces both anchors") {
  const eit::CalibrationAnchors a;
  const double G = constants::cs_fitted_linewidth;
  for (auto model : {eit::DephasingModel::constant, eit::DephasingModel::control_induced}) {
    CAPTURE(static_cast<int>(model));
    const auto cal = eit::calibrate(a, G, model, 1.0 / 4.72e-6);
    LambdaScheme base;
    const auto s = cal.apply(base);
    const double w16 = eit::rabi_from_power({1.6e-3, 400e-6, 0.0}, cal.rabi_factor);
    const double w05 = eit::rabi_from_power({0.5e-3, 400e-6, 0.0}, cal.rabi_factor);
    CHECK(eit::eit_spectrum(3.0, s, w16, {0.0})[0] == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(eit::group_delay(3.0, s, w05, 5e-3).delay_s == doctest::Approx(60e-9).epsilon(1e-9));
    CHECK(cal.rabi_factor > 0.0);
    if (model == eit::DephasingModel::constant) {
      CHECK(cal.control_dephasing_s == 0.0);
      CHECK(cal.gamma_gs_rad_per_s > 0.0);
    } else {
      CHECK(cal.gamma_gs_rad_per_s == doctest::Approx(1.0 / 4.72e-6));
      CHECK(cal.control_dephasing_s == doctest::Approx(1.20235e-9).epsilon(1e-3));
      CHECK(cal.rabi_factor == doctest::Approx(0.133106).epsilon(1e-3));
    }
  }
}

TEST_CASE("calibration errors") {
  eit::CalibrationAnchors a;
  a.transparency = 1.2;
  CHECK_THROWS_AS(eit::calibrate(a, constants::cs_fitted_linewidth,
                                 eit::DephasingModel::constant),
                  DomainError);
  a = eit::CalibrationAnchors{};
  a.delay_s = -1.0;
  CHECK_THROWS_AS(eit::calibrate(a, constants::cs_fitted_linewidth,
                                 eit::DephasingModel::constant),
                  DomainError);
  // A dark decay larger than the anchor allows has no solution.
  CHECK_THROWS_AS(eit::calibrate(eit::CalibrationAnchors{}, constants::cs_fitted_linewidth,
                                 eit::DephasingModel::control_induced, 1e8),
                  SolverError);
}

TEST_CASE("decoherence-dominant flag") {
  const auto s = scheme_with(0.2 * constants::cs_fitted_linewidth);
  CHECK(s.decoherence_dominant(1e6));
  CHECK_FALSE(scheme_with(1e5).decoherence_dominant(1e6));
  CHECK(scheme_with(1e5, 1e-9).effective_gamma_gs(1e7) == doctest::Approx(1e5 + 1e-9 * 1e14));
}
