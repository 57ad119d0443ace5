// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nfmem/decoherence.hpp"
#include "nfmem/eit.hpp"
#include "nfmem/ensemble.hpp"
#include "nfmem/fitkit.hpp"
#include "nfmem/propagation.hpp"
#include "nfmem/scenario.hpp"
#include "nfmem/waveguide.hpp"
#include "roundtrip.hpp"

using namespace nfmem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a / b - 1.0); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void mode_fraction() {
  const auto t0 = std::chrono::steady_clock::now();
  waveguide::FiberSpec f;
  f.radius_m = 200e-9;
  f.wavelength_m = 852e-9;
  f.n_core = 1.4525;
  const auto m = waveguide::solve_he11(f);
  const double secs = seconds_since(t0);
  const double frac = m.evanescent_fraction;
  report(1, std::abs(frac - 0.40) <= 0.05 && secs < 1.0,
         fmt("evanescent power fraction at 400 nm = %.4f (target 0.40 +/- 0.05), %.3f s", frac,
             secs));
}

void surface_scan() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = scenario::compute("mode_scan", scenario::default_config("mode_scan"), 1);
  const double secs = seconds_since(t0);
  const double d = out.summary["argmax_diameter_nm"].get<double>();
  report(2, std::abs(d - 400.0) <= 30.0 && secs < 5.0,
         fmt("surface intensity maximum at %.0f nm over 250-800 nm (target 400 +/- 30), %.3f s",
             d, secs));
}

void atom_numbers() {
  ensemble::CloudSpec cloud;
  waveguide::FiberSpec fiber;
  fiber.radius_m = 200e-9;
  const double n_annulus = ensemble::effective_atom_number(cloud, fiber, 4.0);
  const double n_abs = ensemble::atom_number_from_absorption(8e-9, 3.8e-12);
  report(3, std::abs(n_annulus - 1508.0) <= 1.0 && std::abs(n_abs - 2000.0) <= 500.0,
         fmt("uniform 4r annulus N = %.2f (target 1508 +/- 1); P_abs/p = %.1f (inside 2000 +/- "
             "500)",
             n_annulus, n_abs));
}

void lifetimes() {
  const auto life = decoherence::resolve_lifetimes(decoherence::DecoherenceParams{});
  const double t1 = life.tau1_s * 1e6, t2 = life.tau2_s * 1e6, tD = life.tau_D_s * 1e6;
  const bool ok = rel(t1, 3.6) <= 0.02 && rel(t2, 5.35) <= 0.02 && rel(tD, 4.72) <= 0.02 &&
                  std::abs(tD - 5.5) <= 1.0;
  report(4, ok,
         fmt("tau1 = %.3f us (3.6), tau2 = %.3f us (5.35), tau_D = %.3f us (4.72, within 5.5 +/- "
             "1), all to 2%%",
             t1, t2, tD));
}

void revivals() {
  std::vector<double> t;
  for (int i = 0; i <= 1500; ++i) t.push_back(i * 10e-9);
  const std::vector<std::vector<std::pair<int, double>>> weightings = {
      decoherence::MagneticScenario::flat_populations(3),
      {{-1, 0.5}, {0, 0.5}},
      {{0, 0.1}, {1, 0.2}, {2, 0.3}, {3, 0.4}},
      {{-3, 0.05}, {0, 0.9}, {4, 0.05}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [b, paper] : {std::pair{0.4, 3.5}, std::pair{0.6, 2.35}}) {
    std::vector<double> first;
    double spread = 0.0;
    for (const auto& w : weightings) {
      decoherence::MagneticScenario s;
      s.b_field_T = b * 1e-4;
      s.m_populations = w;
      const auto r = decoherence::find_revivals(t, s, decoherence::DecoherenceParams{});
      if (r.rephasing_times_s.empty()) {
        ok = false;
        continue;
      }
      if (first.empty()) first = r.rephasing_times_s;
      if (r.rephasing_times_s.size() != first.size()) {
        ok = false;
        continue;
      }
      for (std::size_t k = 0; k < first.size(); ++k) {
        spread = std::max(spread, rel(r.rephasing_times_s[k], first[k]));
      }
    }
    const double t1 = first.empty() ? 0.0 : first[0] * 1e6;
    ok = ok && rel(t1, paper) <= 0.05 && spread < 1e-6;
    detail += fmt("B = %.1f G -> %.3f us (%.2f +/- 5%%), weight spread %.1e; ", b, t1, paper,
                  spread);
  }
  report(5, ok, detail + "4 weightings");
}

propagation::PropagationCase fig3b_case(const config::Config& cfg, bool storage) {
  return scenario::case_from(cfg, scenario::calibration_from(cfg), storage);
}

void slow_light() {
  const auto cfg = scenario::default_config("fig3a");
  const auto cal = scenario::calibration_from(cfg);
  const auto scheme = scenario::scheme_from(cfg, cal);
  const double rabi = scenario::rabi_at(cfg, cal, 0.5e-3);
  const auto gd = eit::group_delay(3.0, scheme, rabi, 5e-3);

  // Long Gaussian probe: the flux centroid must follow the analytic group delay.
  auto c = scenario::case_from(cfg, cal, false);
  c.probe.shape = propagation::PulseShape::gaussian;
  c.probe.fwhm_s = 400e-9;
  c.grid.t_start_s = -2400e-9;
  c.grid.t_end_s = 2400e-9;
  c.grid.dt_s = 1e-9;
  const auto r = propagation::propagate_pulse(c);
  const double mismatch = rel(r.group_delay_s, gd.delay_s);
  const double ratio = gd.slowdown / 3000.0;
  report(6, ratio <= 1.25 && ratio >= 1 / 1.25 && mismatch < 0.05,
         fmt("delay %.2f ns, slowdown %.0f (3000 within x1.25); 400 ns Gaussian centroid %.2f ns, "
             "mismatch %.2f%% (< 5%%)",
             gd.delay_s * 1e9, gd.slowdown, r.group_delay_s * 1e9, 100 * mismatch));
}

void storage() {
  const auto cfg = scenario::default_config("fig3b");
  const auto out = scenario::compute("fig3b", cfg, 1);
  const double eta = out.summary["efficiency"].get<double>();
  bool passive = out.summary["passive"].get<bool>();

  std::vector<propagation::PropagationCase> sweep;
  for (int od = 1; od <= 10; ++od) {
    auto c = fig3b_case(cfg, true);
    c.medium.od = od;
    sweep.push_back(c);
  }
  auto late = fig3b_case(cfg, true);
  late.grid.t_end_s = 1500e-9;
  late.control.switch_off_s = 800e-9;
  late.control.switch_on_s = 900e-9;
  sweep.push_back(late);
  const auto res = propagation::propagate_batch(sweep);

  bool monotone = true;
  std::string etas;
  for (int i = 0; i < 10; ++i) {
    etas += fmt("%s%.4f", i ? "," : "", res[i].retrieval_efficiency);
    if (i > 0 && !(res[i].retrieval_efficiency > res[i - 1].retrieval_efficiency)) {
      monotone = false;
    }
  }
  for (const auto& r : res) passive = passive && r.output_photons <= r.input_photons;
  const double eta_late = res.back().retrieval_efficiency;
  const bool ok = eta >= 0.05 && eta <= 0.20 && monotone && eta_late < 1e-3 && passive;
  report(7, ok,
         fmt("eta = %.4f (in [0.05, 0.20]); eta(OD=1..10) = [%s] %s; late switch-off eta = %.1e; "
             "passive %s",
             eta, etas.c_str(), monotone ? "increasing" : "NOT increasing", eta_late,
             passive ? "yes" : "no"));
}

void round_trips() {
  bool ok = true;
  std::string detail;
  for (const auto& t : roundtrip::operating_points()) {
    const auto exact = fitkit::fit(roundtrip::synthetic(t, 0, 0.0));
    const double err = roundtrip::worst_relative_error(exact, t);
    int misses = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto r = fitkit::fit(roundtrip::synthetic(t, seed, 0.01));
      const double pull = roundtrip::worst_pull(r, t);
      worst = std::max(worst, pull);
      if (!r.converged || !(pull < 3.0)) ++misses;
    }
    ok = ok && exact.converged && err < 1e-6 && misses == 0;
    detail += fmt("%s: exact %.1e, %d/20 outside 3 sigma (worst %.2f); ",
                  fitkit::to_string(t.model).c_str(), err, misses, worst);
  }
  report(8, ok, detail);
}

void numerics() {
  const auto cfg = scenario::default_config("fig3b");
  const auto rep = propagation::check_refinement(fig3b_case(cfg, true));

  eit::LambdaScheme s;
  s.gamma_gs_rad_per_s = 2e5;
  ensemble::AbsorptionModel lor;
  lor.od = 3.0;
  lor.gamma_rad_per_s = s.gamma_ge_rad_per_s;
  std::vector<double> d;
  for (int i = -600; i <= 600; ++i) d.push_back(i * 0.1 * constants::two_pi * 1e6);
  const auto t = eit::eit_spectrum(3.0, s, 0.0, d);
  double dev = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    dev = std::max(dev, std::abs(t[i] - ensemble::lorentzian_transmission(d[i], lor)));
  }
  report(9, rep.relative_change < 0.01 && dev <= 1e-12,
         fmt("eta %.6f -> %.6f under dt/2, 2 nz (change %.2e < 1%%); Omega_c = 0 vs Lorentzian "
             "max |dT| = %.1e (<= 1e-12)",
             rep.coarse, rep.fine, rep.relative_change, dev));
}

void determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "nfmem_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  int identical = 0, total = 0;
  for (const auto& info : scenario::catalog()) {
    std::string text[2];
    for (int run = 0; run < 2; ++run) {
      scenario::Request r;
      r.id = info.id;
      r.cfg = scenario::default_config(info.id);
      if (info.uses_seed) r.cfg.set("synthetic.noise", "0.01");
      r.seed = 12345;
      r.out_path = (dir / (info.id + "_" + std::to_string(run) + ".csv")).string();
      scenario::run_scenario(r);
      text[run] = slurp(r.out_path);
    }
    ++total;
    if (!text[0].empty() && text[0] == text[1]) ++identical;
  }
  fs::remove_all(dir);
  report(10, identical == total,
         fmt("%d/%d scenarios byte-identical across two runs with the same seed", identical,
             total));
}

template <class F>
void guarded(int id, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded(1, mode_fraction);
  guarded(2, surface_scan);
  guarded(3, atom_numbers);
  guarded(4, lifetimes);
  guarded(5, revivals);
  guarded(6, slow_light);
  guarded(7, storage);
  guarded(8, round_trips);
  guarded(9, numerics);
  guarded(10, determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
