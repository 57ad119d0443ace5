#include "nfmem/scenario.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "nfmem/constants.hpp"
#include "nfmem/counting.hpp"
#include "nfmem/ensemble.hpp"
#include "nfmem/error.hpp"
#include "nfmem/fitkit.hpp"

namespace nfmem::scenario {
namespace {

using nlohmann::ordered_json;
constexpr double kMHz = constants::two_pi * 1e6;
constexpr double kDeg = constants::pi / 180.0;

const std::vector<std::string> kFiberKeys = {"fiber.diameter_nm", "fiber.wavelength_nm",
                                             "fiber.n_core", "fiber.n_clad"};
const std::vector<std::string> kCalibrationKeys = {
    "scheme.gamma_MHz",       "calibration.mode",          "calibration.dephasing_model",
    "calibration.transparency", "calibration.transparency_power_mW", "calibration.od",
    "calibration.delay_ns",   "calibration.delay_power_mW", "calibration.rabi_factor",
    "calibration.gamma_gs_per_s", "calibration.kappa_s",   "control.waist_um",
    "control.angle_deg",      "cloud.temperature_uK",      "decoherence.zeeman_broadening_kHz",
    "decoherence.tau_D_us"};
const std::vector<std::string> kPropagationKeys = {
    "control.power_mW", "control.polarization_deg", "control.switch_off_ns",
    "control.switch_on_ns", "control.ramp_ns", "probe.photons", "probe.fwhm_ns", "probe.shape",
    "probe.detuning_MHz", "medium.od", "medium.length_mm", "grid.t_start_ns", "grid.t_end_ns",
    "grid.dt_ns", "grid.nz"};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<ScenarioInfo> build_catalog() {
  std::vector<ScenarioInfo> c;
  c.push_back({"fig1b", "Fig. 1(b)", "Saturated transmission vs probe power, fit and atom number",
               "P_sat = 1.3 nW, P_abs = alpha0 L P_sat = 8 nW, N = P_abs/p ~ 2000 (annulus ~ 1500)",
               join({{"absorption.alpha0_L", "absorption.p_sat_nW", "absorption.k",
                      "absorption.p_single_pW", "sweep.p_max_nW", "sweep.power_points",
                      "synthetic.noise", "cloud.density_cm3", "cloud.temperature_uK",
                      "cloud.length_mm", "cloud.shell_radii", "cloud.density_model",
                      "cloud.c3_kHz_um3"},
                     kFiberKeys}),
               {},
               true});
  c.push_back({"fig1c", "Fig. 1(c)", "Two-level transmission vs detuning and Lorentzian fit",
               "OD = 3, Gamma/2pi = 6.8 MHz",
               {"absorption.od", "absorption.gamma_MHz", "sweep.span_MHz", "sweep.detuning_points",
                "synthetic.noise"},
               {},
               true});
  c.push_back({"fig2", "Fig. 2", "EIT transmission spectra for several control powers",
               "T(0) = 75% at 1.6 mW",
               join({kCalibrationKeys,
                     {"fig2.powers_mW", "medium.od", "sweep.span_MHz", "sweep.detuning_points"}}),
               {},
               false});
  c.push_back({"fig3a", "Fig. 3(a)", "Slow-light pulses for several control powers",
               "60 ns delay at 0.5 mW (3000-fold group-velocity reduction)",
               join({kCalibrationKeys, kPropagationKeys, {"fig3a.powers_mW"}}),
               {},
               false});
  c.push_back({"fig3b", "Fig. 3(b)", "Storage and retrieval at the single-photon level",
               "efficiency target 10% (measured 10 +/- 0.5 %), SNR 20 at 0.6 photons/pulse",
               join({kCalibrationKeys, kPropagationKeys,
                     {"counting.background", "counting.shots", "counting.window_ns"}}),
               {},
               true});
  c.push_back({"fig3c", "Fig. 3(c)", "Storage efficiency vs control polarization angle",
               "efficiency maximal for a vertical control (orthogonal to the signal)",
               join({kCalibrationKeys, kPropagationKeys, {"fig3c.angles_deg"}}),
               {},
               false});
  c.push_back({"fig4a", "Fig. 4(a)", "Efficiency vs storage time and lifetime fit",
               "tau_1 = 3.6 us, tau_2 = 5.3 us, tau_3 = 10 us; fit tau_D = 5.5 us, tau_T = 3.7 us",
               join({kFiberKeys,
                     {"cloud.temperature_uK", "control.angle_deg",
                      "decoherence.zeeman_broadening_kHz", "decoherence.tau_D_us",
                      "decoherence.tau_T_us", "decay.t_max_us", "decay.points", "decay.fit_mode",
                      "synthetic.noise"}}),
               {},
               true});
  const std::vector<std::string> revival_keys =
      join({kFiberKeys,
            {"cloud.temperature_uK", "control.angle_deg", "decoherence.zeeman_broadening_kHz",
             "decoherence.tau_D_us", "decoherence.tau_T_us", "magnetic.b_field_G",
             "magnetic.m_max", "magnetic.delta_m", "magnetic.populations", "revival.t_max_us",
             "revival.dt_ns"}});
  c.push_back({"fig4b", "Fig. 4(b)", "Larmor collapses and revivals at 0.4 G",
               "revivals at multiples of the half Larmor period, 3.5 us for 0.4 G", revival_keys,
               {{"magnetic.b_field_G", "0.4"}}, false});
  c.push_back({"fig4c", "Fig. 4(c)", "Larmor collapses and revivals at 0.6 G",
               "revivals at multiples of the half Larmor period, 2.35 us for 0.6 G", revival_keys,
               {{"magnetic.b_field_G", "0.6"}}, false});
  c.push_back({"mode_scan", "Fig. 1(a) context",
               "HE11 surface intensity and evanescent fraction vs fiber diameter",
               "surface intensity maximal around 400 nm; evanescent fraction reaches 40%",
               join({kFiberKeys,
                     {"scan.d_min_nm", "scan.d_max_nm", "scan.d_step_nm", "scan.power_nW"}}),
               {},
               false});
  c.push_back({"custom", "-", "Single propagation run with arbitrary overrides",
               "slow light (custom.storage=off) or storage (custom.storage=on)",
               join({kCalibrationKeys, kPropagationKeys, {"custom.storage"}}),
               {},
               false});
  return c;
}

std::vector<double> linspace(double a, double b, int n) {
  if (n < 2) throw DomainError("a sweep needs at least 2 points");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return out;
}

std::vector<double> scaled(const std::vector<double>& v, double s) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(x * s);
  return out;
}

ordered_json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

// Synthetic measurement noise; returns sigma (NaN when noiseless).
double add_noise(std::vector<double>& y, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw DomainError("synthetic.noise must be >= 0");
  if (sigma == 0.0) return std::numeric_limits<double>::quiet_NaN();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  for (double& v : y) v += dist(rng);
  return sigma;
}

fitkit::FitResult fit_curve(fitkit::ModelId model, const std::vector<double>& x,
                            const std::vector<double>& y, double sigma,
                            std::set<std::string> frozen = {},
                            std::vector<double> guess = {}) {
  fitkit::FitProblem p;
  p.model = model;
  p.frozen = std::move(frozen);
  p.initial_guess = std::move(guess);
  for (std::size_t i = 0; i < x.size(); ++i) p.data.push_back({x[i], y[i], sigma});
  return fitkit::fit(p);
}

ordered_json fit_json(const fitkit::FitResult& r) {
  ordered_json j;
  j["converged"] = r.converged;
  j["reduced_chi2"] = r.reduced_chi2;
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    j[r.names[i]] = r.parameters[i];
    j[r.names[i] + "_err"] = finite_or_null(r.uncertainties[i]);
  }
  return j;
}

void require_converged(const fitkit::FitResult& r, const std::string& what) {
  if (!r.converged) throw FitError(what + " fit did not converge: " + r.message);
}

ensemble::CloudSpec cloud_from(const config::Config& cfg) {
  ensemble::CloudSpec c;
  c.peak_density_per_m3 = cfg.real("cloud.density_cm3") * 1e6;
  c.temperature_K = cfg.real("cloud.temperature_uK") * 1e-6;
  c.overlap_length_m = cfg.real("cloud.length_mm") * 1e-3;
  c.c3_jm3 = constants::planck * cfg.real("cloud.c3_kHz_um3") * 1e3 * 1e-18;
  c.model = cfg.choice("cloud.density_model") == "uniform" ? ensemble::DensityModel::uniform
                                                           : ensemble::DensityModel::vdw_depleted;
  return c;
}

ensemble::AbsorptionModel absorption_from(const config::Config& cfg) {
  ensemble::AbsorptionModel m;
  m.alpha0_L = cfg.real("absorption.alpha0_L");
  m.p_sat_W = cfg.real("absorption.p_sat_nW") * 1e-9;
  m.k_exp = cfg.real("absorption.k");
  m.od = cfg.real("absorption.od");
  m.gamma_rad_per_s = cfg.real("absorption.gamma_MHz") * kMHz;
  return m;
}

std::vector<double> flux_per_us(const std::vector<double>& flux) { return scaled(flux, 1e-6); }

// --- scenarios -------------------------------------------------------------------------------

Output run_mode_scan(const config::Config& cfg) {
  const auto fiber = fiber_from(cfg);
  const double d0 = cfg.real("scan.d_min_nm"), d1 = cfg.real("scan.d_max_nm");
  const double step = cfg.real("scan.d_step_nm");
  if (!(step > 0.0) || !(d1 >= d0)) throw DomainError("scan range must satisfy d_min <= d_max");
  std::vector<double> d;
  const auto n = static_cast<int>(std::floor((d1 - d0) / step + 1e-9));
  for (int i = 0; i <= n; ++i) d.push_back((d0 + step * i) * 1e-9);
  const auto scan = waveguide::surface_intensity_scan(fiber.wavelength_m, d,
                                                      cfg.real("scan.power_nW") * 1e-9,
                                                      fiber.n_core, fiber.n_clad);
  Output out;
  std::vector<double> dn, ieff, neff, frac;
  for (const auto& p : scan.points) {
    dn.push_back(p.diameter_m * 1e9);
    ieff.push_back(p.surface_intensity_w_per_m2);
    neff.push_back(p.n_eff);
    frac.push_back(p.evanescent_fraction);
  }
  out.table.add("diameter_nm", dn);
  out.table.add("surface_intensity_W_per_m2", ieff);
  out.table.add("n_eff", neff);
  out.table.add("evanescent_fraction", frac);

  const auto mode = waveguide::solve_he11(fiber);
  out.summary["argmax_diameter_nm"] = scan.argmax_diameter_m * 1e9;
  out.summary["refined_argmax_diameter_nm"] = scan.refined_argmax_diameter_m * 1e9;
  out.summary["diameter_nm"] = 2.0 * fiber.radius_m * 1e9;
  out.summary["n_eff"] = mode.n_eff;
  out.summary["evanescent_fraction"] = mode.evanescent_fraction;
  out.summary["v_number"] = mode.v_number;
  return out;
}

Output run_fig1b(const config::Config& cfg, std::uint64_t seed) {
  const auto model = absorption_from(cfg);
  const auto p_nW = linspace(0.0, cfg.real("sweep.p_max_nW"), cfg.integer("sweep.power_points"));
  std::vector<double> t;
  for (double p : p_nW) t.push_back(ensemble::saturation_transmission(p * 1e-9, model));
  const double sigma = add_noise(t, cfg.real("synthetic.noise"), seed);

  Output out;
  out.table.add("power_nW", p_nW);
  out.table.add("transmission", t);
  if (!std::isnan(sigma)) out.table.add("sigma", std::vector<double>(t.size(), sigma));

  const auto fr = fit_curve(fitkit::ModelId::saturation, p_nW, t, sigma);
  require_converged(fr, "saturation");
  const double p_abs = fr.parameters[0] * fr.parameters[1] * 1e-9;
  const double p_single = cfg.real("absorption.p_single_pW") * 1e-12;

  auto cloud = cloud_from(cfg);
  const auto fiber = fiber_from(cfg);
  const double shell = cfg.real("cloud.shell_radii");
  auto uniform = cloud;
  uniform.model = ensemble::DensityModel::uniform;
  auto depleted = cloud;
  depleted.model = ensemble::DensityModel::vdw_depleted;

  out.summary["fit"] = fit_json(fr);
  out.summary["p_abs_nW"] = p_abs * 1e9;
  out.summary["atom_number_from_absorption"] =
      ensemble::atom_number_from_absorption(p_abs, p_single);
  out.summary["atom_number_annulus"] = ensemble::effective_atom_number(cloud, fiber, shell);
  out.summary["atom_number_annulus_uniform"] =
      ensemble::effective_atom_number(uniform, fiber, shell);
  out.summary["atom_number_annulus_depleted"] =
      ensemble::effective_atom_number(depleted, fiber, shell);
  out.summary["capture_length_nm"] = ensemble::capture_length(cloud) * 1e9;
  return out;
}

Output run_fig1c(const config::Config& cfg, std::uint64_t seed) {
  const auto model = absorption_from(cfg);
  const double span = cfg.real("sweep.span_MHz");
  const auto x = linspace(-span, span, cfg.integer("sweep.detuning_points"));
  std::vector<double> t;
  for (double d : x) t.push_back(ensemble::lorentzian_transmission(d * kMHz, model));
  const double sigma = add_noise(t, cfg.real("synthetic.noise"), seed);

  Output out;
  out.table.add("detuning_MHz", x);
  out.table.add("transmission", t);
  if (!std::isnan(sigma)) out.table.add("sigma", std::vector<double>(t.size(), sigma));

  const auto fr = fit_curve(fitkit::ModelId::lorentzian_od, x, t, sigma);
  require_converged(fr, "lorentzian_od");
  out.summary["fit"] = fit_json(fr);
  out.summary["od"] = fr.parameters[0];
  out.summary["gamma_MHz"] = fr.parameters[1];
  return out;
}

ordered_json calibration_json(const eit::Calibration& cal, const eit::LambdaScheme& scheme) {
  ordered_json j;
  j["dephasing_model"] =
      cal.model == eit::DephasingModel::constant ? "constant" : "control_induced";
  j["rabi_factor"] = cal.rabi_factor;
  j["gamma_gs_per_s"] = cal.gamma_gs_rad_per_s;
  j["kappa_s"] = cal.control_dephasing_s;
  j["gamma_MHz"] = scheme.gamma_ge_rad_per_s / kMHz;
  return j;
}

Output run_fig2(const config::Config& cfg) {
  const auto cal = calibration_from(cfg);
  const auto scheme = scheme_from(cfg, cal);
  const double od = cfg.real("medium.od");
  const double span = cfg.real("sweep.span_MHz");
  const auto x = linspace(-span, span, cfg.integer("sweep.detuning_points"));
  const auto delta = scaled(x, kMHz);
  const auto powers = cfg.list("fig2.powers_mW");
  if (powers.empty()) throw DomainError("fig2.powers_mW is empty");

  std::vector<double> rabi;
  for (double p : powers) rabi.push_back(rabi_at(cfg, cal, p * 1e-3));
  // Independent jobs, one per control power.
  std::vector<std::vector<double>> spectra(powers.size());
  std::vector<std::exception_ptr> errors(powers.size());
  const auto n = static_cast<long>(powers.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i);
    try {
      spectra[j] = eit::serial::eit_spectrum(od, scheme, rabi[j], delta);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Output out;
  out.table.add("detuning_MHz", x);
  out.table.add("T_no_control", eit::serial::eit_spectrum(od, scheme, 0.0, delta));
  ordered_json curves = ordered_json::array();
  for (std::size_t i = 0; i < powers.size(); ++i) {
    out.table.add("T_" + config::format_number(powers[i]) + "mW", spectra[i]);
    ordered_json c;
    c["power_mW"] = powers[i];
    c["rabi_MHz"] = rabi[i] / kMHz;
    c["transmission_at_resonance"] = eit::eit_spectrum(od, scheme, rabi[i], {0.0})[0];
    c["gamma_gs_per_s"] = scheme.effective_gamma_gs(rabi[i]);
    curves.push_back(c);
  }
  out.summary["calibration"] = calibration_json(cal, scheme);
  out.summary["curves"] = curves;
  return out;
}

Output run_fig3a(const config::Config& cfg) {
  const auto cal = calibration_from(cfg);
  const auto powers = cfg.list("fig3a.powers_mW");
  if (powers.empty()) throw DomainError("fig3a.powers_mW is empty");
  std::vector<propagation::PropagationCase> cases;
  auto ref = case_from(cfg, cal, false);
  ref.medium.od = 0.0;
  cases.push_back(ref);
  for (double p : powers) {
    auto c = case_from(cfg, cal, false);
    const double rabi = rabi_at(cfg, cal, p * 1e-3);
    c.control.rabi_rad_per_s = rabi * std::abs(std::cos(cfg.real("control.polarization_deg") * kDeg));
    c.control.dephasing_rabi_rad_per_s = rabi;
    cases.push_back(c);
  }
  const auto res = propagation::propagate_batch(cases);

  Output out;
  out.table.add("time_ns", scaled(res[0].time_s, 1e9));
  out.table.add("reference_per_us", flux_per_us(res[0].output_flux));
  ordered_json pulses = ordered_json::array();
  for (std::size_t i = 0; i < powers.size(); ++i) {
    const auto& r = res[i + 1];
    out.table.add("out_" + config::format_number(powers[i]) + "mW_per_us",
                  flux_per_us(r.output_flux));
    const auto& c = cases[i + 1];
    const auto gd = eit::group_delay(c.medium.od, c.scheme, c.control.rabi_rad_per_s,
                                     c.medium.length_m);
    ordered_json p;
    p["power_mW"] = powers[i];
    p["rabi_MHz"] = c.control.rabi_rad_per_s / kMHz;
    p["delay_ns"] = (r.group_delay_s - res[0].group_delay_s) * 1e9;
    p["analytic_delay_ns"] = gd.delay_s * 1e9;
    p["slowdown"] = gd.slowdown;
    p["transmission"] = r.transmission;
    pulses.push_back(p);
  }
  out.summary["calibration"] = calibration_json(cal, cases[0].scheme);
  out.summary["pulses"] = pulses;
  return out;
}

Output run_fig3b(const config::Config& cfg, std::uint64_t seed) {
  const auto cal = calibration_from(cfg);
  auto memory = case_from(cfg, cal, true);
  auto reference = case_from(cfg, cal, false);
  reference.medium.od = 0.0;
  auto absorbed = case_from(cfg, cal, false);
  absorbed.control.rabi_rad_per_s = 0.0;
  absorbed.control.dephasing_rabi_rad_per_s = 0.0;
  const auto res = propagation::propagate_batch({reference, absorbed, memory});
  const auto& mem = res[2];
  const auto refine = propagation::check_refinement(memory);

  counting::CountingModel cm;
  cm.mean_photons_in = memory.probe.mean_photon_number;
  cm.efficiency = std::min(mem.retrieval_efficiency, 1.0);
  cm.background_per_window = cfg.real("counting.background");
  cm.n_shots = cfg.integer("counting.shots");
  cm.window_s = cfg.real("counting.window_ns") * 1e-9;
  const auto counts = counting::simulate_counting(cm, seed);

  Output out;
  out.table.add("time_ns", scaled(mem.time_s, 1e9));
  out.table.add("control_rel", mem.control_envelope);
  out.table.add("reference_per_us", flux_per_us(res[0].output_flux));
  out.table.add("absorbed_per_us", flux_per_us(res[1].output_flux));
  out.table.add("memory_per_us", flux_per_us(mem.output_flux));

  bool passive = true;
  // Round-off allowance: the od = 0 reference reproduces the input to the last bit.
  for (const auto& r : res) passive = passive && r.output_photons <= r.input_photons * (1 + 1e-12);
  out.summary["efficiency"] = mem.retrieval_efficiency;
  out.summary["target_efficiency"] = 0.10;
  out.summary["leak_fraction"] = mem.leak_fraction;
  out.summary["absorbed_transmission"] = res[1].transmission;
  out.summary["readout_start_ns"] = mem.readout_start_s * 1e9;
  out.summary["rabi_MHz"] = memory.control.rabi_rad_per_s / kMHz;
  out.summary["passive"] = passive;
  out.summary["refinement"] = {{"coarse", refine.coarse},
                               {"fine", refine.fine},
                               {"relative_change", refine.relative_change},
                               {"converged", refine.converged}};
  out.summary["counting"] = {{"mean_signal", counts.mean_signal},
                             {"mean_background", counts.mean_background},
                             {"snr", finite_or_null(counts.snr)},
                             {"snr_stderr", finite_or_null(counts.snr_stderr)},
                             {"analytic_snr", finite_or_null(counting::analytic_snr(cm))}};
  out.summary["calibration"] = calibration_json(cal, memory.scheme);
  return out;
}

Output run_fig3c(const config::Config& cfg) {
  const auto cal = calibration_from(cfg);
  const auto angles = cfg.list("fig3c.angles_deg");
  if (angles.empty()) throw DomainError("fig3c.angles_deg is empty");
  const double rabi = rabi_at(cfg, cal, cfg.real("control.power_mW") * 1e-3);
  std::vector<propagation::PropagationCase> cases;
  for (double a : angles) {
    auto c = case_from(cfg, cal, true);
    c.control.rabi_rad_per_s = rabi * std::abs(std::cos(a * kDeg));
    c.control.dephasing_rabi_rad_per_s = rabi;
    cases.push_back(c);
  }
  const auto res = propagation::propagate_batch(cases);
  std::vector<double> eta, leak;
  std::size_t best = 0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    eta.push_back(res[i].retrieval_efficiency);
    leak.push_back(res[i].leak_fraction);
    if (eta[i] > eta[best]) best = i;
  }
  Output out;
  out.table.add("angle_deg", angles);
  out.table.add("efficiency", eta);
  out.table.add("leak_fraction", leak);
  out.summary["max_efficiency"] = eta[best];
  out.summary["argmax_angle_deg"] = angles[best];
  out.summary["calibration"] = calibration_json(cal, cases[0].scheme);
  return out;
}

ordered_json lifetimes_json(const decoherence::Lifetimes& l) {
  ordered_json j;
  j["velocity_m_per_s"] = l.velocity_m_per_s;
  j["tau1_us"] = finite_or_null(l.tau1_s * 1e6);
  j["tau2_us"] = finite_or_null(l.tau2_s * 1e6);
  j["tau3_us"] = finite_or_null(l.tau3_s * 1e6);
  j["tau_D_us"] = finite_or_null(l.tau_D_s * 1e6);
  j["tau_T_us"] = finite_or_null(l.tau_T_s * 1e6);
  return j;
}

Output run_fig4a(const config::Config& cfg, std::uint64_t seed) {
  const auto params = decoherence_from(cfg);
  const auto life = decoherence::resolve_lifetimes(params);
  const auto t_us = linspace(0.0, cfg.real("decay.t_max_us"), cfg.integer("decay.points"));
  std::vector<double> eta;
  for (double t : t_us) {
    eta.push_back(decoherence::efficiency_decay(t * 1e-6, life.tau_D_s, life.tau_T_s));
  }
  const double sigma = add_noise(eta, cfg.real("synthetic.noise"), seed);

  Output out;
  out.table.add("storage_time_us", t_us);
  out.table.add("relative_efficiency", eta);
  if (!std::isnan(sigma)) out.table.add("sigma", std::vector<double>(eta.size(), sigma));

  std::set<std::string> frozen;
  std::vector<double> guess;
  if (cfg.choice("decay.fit_mode") == "transit_fixed") {
    frozen.insert("tau_T");
    guess = {fitkit::model_info(fitkit::ModelId::decay_lifetime).parameters[0].default_guess,
             life.tau1_s * 1e6};
  }
  const auto fr = fit_curve(fitkit::ModelId::decay_lifetime, t_us, eta, sigma, frozen, guess);
  require_converged(fr, "decay_lifetime");
  out.summary["lifetimes"] = lifetimes_json(life);
  out.summary["fit"] = fit_json(fr);
  out.summary["fit_mode"] = cfg.choice("decay.fit_mode");
  return out;
}

decoherence::MagneticScenario magnetic_from(const config::Config& cfg) {
  decoherence::MagneticScenario s;
  s.b_field_T = cfg.real("magnetic.b_field_G") * 1e-4;
  s.delta_m = cfg.integer("magnetic.delta_m");
  const int m_max = cfg.integer("magnetic.m_max");
  if (m_max < 0) throw DomainError("magnetic.m_max must be >= 0");
  const auto w = cfg.list("magnetic.populations");
  if (w.empty()) {
    s.m_populations = decoherence::MagneticScenario::flat_populations(m_max);
  } else {
    if (w.size() != static_cast<std::size_t>(2 * m_max + 1)) {
      throw DomainError("magnetic.populations needs 2 m_max + 1 weights");
    }
    double sum = 0.0;
    for (double v : w) {
      if (v < 0.0) throw DomainError("magnetic.populations must be non-negative");
      sum += v;
    }
    if (!(sum > 0.0)) throw DomainError("magnetic.populations must not all vanish");
    s.m_populations.clear();
    for (int m = -m_max; m <= m_max; ++m) {
      s.m_populations.emplace_back(m, w[static_cast<std::size_t>(m + m_max)] / sum);
    }
  }
  return s;
}

Output run_revivals(const config::Config& cfg) {
  const auto params = decoherence_from(cfg);
  const auto life = decoherence::resolve_lifetimes(params);
  const auto scen = magnetic_from(cfg);
  const double t_max = cfg.real("revival.t_max_us") * 1e-6;
  const double dt = cfg.real("revival.dt_ns") * 1e-9;
  if (!(dt > 0.0) || !(t_max > dt)) throw DomainError("revival grid must satisfy 0 < dt < t_max");
  std::vector<double> t;
  const auto n = static_cast<long>(std::llround(t_max / dt));
  for (long i = 0; i <= n; ++i) t.push_back(dt * static_cast<double>(i));
  const auto env = decoherence::revival_envelope(t, scen, params);
  std::vector<double> decay;
  for (double ti : t) decay.push_back(decoherence::efficiency_decay(ti, life.tau_D_s, life.tau_T_s));
  const auto rev = decoherence::find_revivals(t, scen, params);

  Output out;
  out.table.add("storage_time_us", scaled(t, 1e6));
  out.table.add("relative_efficiency", env);
  out.table.add("decay_envelope", decay);
  out.summary["b_field_G"] = scen.b_field_T * 1e4;
  out.summary["half_larmor_period_us"] =
      scen.b_field_T > 0.0 ? finite_or_null(decoherence::half_larmor_period(scen.b_field_T,
                                                                            scen.g_f) * 1e6)
                           : ordered_json(nullptr);
  out.summary["revival_times_us"] = scaled(rev.rephasing_times_s, 1e6);
  out.summary["envelope_peaks_us"] = scaled(rev.envelope_peaks_s, 1e6);
  out.summary["lifetimes"] = lifetimes_json(life);
  return out;
}

Output run_custom(const config::Config& cfg) {
  const auto cal = calibration_from(cfg);
  const bool storage = cfg.choice("custom.storage") == "on";
  const auto c = case_from(cfg, cal, storage);
  auto ref = c;
  ref.medium.od = 0.0;
  const auto res = propagation::propagate_batch({ref, c});
  const auto& r = res[1];
  Output out;
  out.table.add("time_ns", scaled(r.time_s, 1e9));
  out.table.add("control_rel", r.control_envelope);
  out.table.add("input_per_us", flux_per_us(r.input_flux));
  out.table.add("output_per_us", flux_per_us(r.output_flux));
  out.summary["transmission"] = r.transmission;
  out.summary["delay_ns"] = (r.group_delay_s - res[0].group_delay_s) * 1e9;
  if (c.control.rabi_rad_per_s > 0.0) {
    const auto gd =
        eit::group_delay(c.medium.od, c.scheme, c.control.rabi_rad_per_s, c.medium.length_m);
    out.summary["analytic_delay_ns"] = gd.delay_s * 1e9;
    out.summary["slowdown"] = gd.slowdown;
  }
  out.summary["storage"] = storage;
  out.summary["efficiency"] = r.retrieval_efficiency;
  out.summary["leak_fraction"] = r.leak_fraction;
  out.summary["calibration"] = calibration_json(cal, c.scheme);
  return out;
}

Output dispatch(std::string_view id, const config::Config& cfg, std::uint64_t seed) {
  if (id == "mode_scan") return run_mode_scan(cfg);
  if (id == "fig1b") return run_fig1b(cfg, seed);
  if (id == "fig1c") return run_fig1c(cfg, seed);
  if (id == "fig2") return run_fig2(cfg);
  if (id == "fig3a") return run_fig3a(cfg);
  if (id == "fig3b") return run_fig3b(cfg, seed);
  if (id == "fig3c") return run_fig3c(cfg);
  if (id == "fig4a") return run_fig4a(cfg, seed);
  if (id == "fig4b" || id == "fig4c") return run_revivals(cfg);
  if (id == "custom") return run_custom(cfg);
  throw DomainError("unknown scenario '" + std::string(id) + "'");
}

}  // namespace

const std::vector<ScenarioInfo>& catalog() {
  static const std::vector<ScenarioInfo> c = build_catalog();
  return c;
}

const ScenarioInfo& info(std::string_view id) {
  for (const auto& s : catalog()) {
    if (s.id == id) return s;
  }
  throw DomainError("unknown scenario '" + std::string(id) + "'");
}

config::Config default_config(std::string_view id) {
  config::Config cfg;
  for (const auto& [k, v] : info(id).defaults) cfg.set(k, v);
  return cfg;
}

void Table::add(std::string name, std::vector<double> values) {
  if (!data.empty() && values.size() != rows()) {
    throw DomainError("table column '" + name + "' has the wrong length");
  }
  columns.push_back(std::move(name));
  data.push_back(std::move(values));
}

waveguide::FiberSpec fiber_from(const config::Config& cfg) {
  waveguide::FiberSpec f;
  f.radius_m = 0.5 * cfg.real("fiber.diameter_nm") * 1e-9;
  f.wavelength_m = cfg.real("fiber.wavelength_nm") * 1e-9;
  f.n_core = cfg.real("fiber.n_core");
  f.n_clad = cfg.real("fiber.n_clad");
  f.validate();
  return f;
}

decoherence::DecoherenceParams decoherence_from(const config::Config& cfg) {
  decoherence::DecoherenceParams p;
  p.temperature_K = cfg.real("cloud.temperature_uK") * 1e-6;
  p.fiber_radius_m = 0.5 * cfg.real("fiber.diameter_nm") * 1e-9;
  p.wavelength_m = cfg.real("fiber.wavelength_nm") * 1e-9;
  p.control_angle_rad = cfg.real("control.angle_deg") * kDeg;
  p.zeeman_broadening_Hz = cfg.real("decoherence.zeeman_broadening_kHz") * 1e3;
  p.tau_D_s = cfg.real("decoherence.tau_D_us") * 1e-6;
  p.tau_T_s = cfg.real("decoherence.tau_T_us") * 1e-6;
  p.validate();
  return p;
}

eit::Calibration calibration_from(const config::Config& cfg) {
  const auto model = cfg.choice("calibration.dephasing_model") == "constant"
                         ? eit::DephasingModel::constant
                         : eit::DephasingModel::control_induced;
  if (cfg.choice("calibration.mode") == "explicit") {
    eit::Calibration cal;
    cal.model = model;
    cal.rabi_factor = cfg.real("calibration.rabi_factor");
    cal.gamma_gs_rad_per_s = cfg.real("calibration.gamma_gs_per_s");
    cal.control_dephasing_s =
        model == eit::DephasingModel::constant ? 0.0 : cfg.real("calibration.kappa_s");
    if (!(cal.rabi_factor > 0.0)) throw DomainError("calibration.rabi_factor must be positive");
    return cal;
  }
  eit::CalibrationAnchors a;
  a.transparency = cfg.real("calibration.transparency");
  a.transparency_power_W = cfg.real("calibration.transparency_power_mW") * 1e-3;
  a.od = cfg.real("calibration.od");
  a.delay_s = cfg.real("calibration.delay_ns") * 1e-9;
  a.delay_power_W = cfg.real("calibration.delay_power_mW") * 1e-3;
  a.waist_m = cfg.real("control.waist_um") * 1e-6;
  const double gamma_ge = cfg.real("scheme.gamma_MHz") * kMHz;
  if (model == eit::DephasingModel::constant) return eit::calibrate(a, gamma_ge, model);
  // Dark ground-state decay from the lifetime model: 1 / tau_D.
  const auto life = decoherence::resolve_lifetimes(decoherence_from(cfg));
  const double gamma_dark = std::isfinite(life.tau_D_s) ? 1.0 / life.tau_D_s : 0.0;
  return eit::calibrate(a, gamma_ge, model, gamma_dark);
}

eit::LambdaScheme scheme_from(const config::Config& cfg, const eit::Calibration& cal) {
  eit::LambdaScheme s;
  s.gamma_ge_rad_per_s = cfg.real("scheme.gamma_MHz") * kMHz;
  s = cal.apply(s);
  s.validate();
  return s;
}

double rabi_at(const config::Config& cfg, const eit::Calibration& cal, double power_W) {
  eit::ControlField f;
  f.power_W = power_W;
  f.waist_m = cfg.real("control.waist_um") * 1e-6;
  f.angle_rad = cfg.real("control.angle_deg") * kDeg;
  return eit::rabi_from_power(f, cal.rabi_factor);
}

propagation::PropagationCase case_from(const config::Config& cfg, const eit::Calibration& cal,
                                       bool storage) {
  propagation::PropagationCase c;
  c.scheme = scheme_from(cfg, cal);
  c.probe.mean_photon_number = cfg.real("probe.photons");
  c.probe.fwhm_s = cfg.real("probe.fwhm_ns") * 1e-9;
  const auto& shape = cfg.choice("probe.shape");
  c.probe.shape = shape == "gaussian" ? propagation::PulseShape::gaussian
                  : shape == "square" ? propagation::PulseShape::square
                                      : propagation::PulseShape::exponential_rising;
  c.probe.detuning_rad_per_s = cfg.real("probe.detuning_MHz") * kMHz;

  const double rabi = rabi_at(cfg, cal, cfg.real("control.power_mW") * 1e-3);
  c.control.rabi_rad_per_s = rabi * std::abs(std::cos(cfg.real("control.polarization_deg") * kDeg));
  c.control.dephasing_rabi_rad_per_s = rabi;
  c.control.storage = storage;
  c.control.switch_off_s = cfg.real("control.switch_off_ns") * 1e-9;
  c.control.switch_on_s = cfg.real("control.switch_on_ns") * 1e-9;
  c.control.ramp_s = cfg.real("control.ramp_ns") * 1e-9;

  c.medium.od = cfg.real("medium.od");
  c.medium.length_m = cfg.real("medium.length_mm") * 1e-3;
  c.grid.t_start_s = cfg.real("grid.t_start_ns") * 1e-9;
  c.grid.t_end_s = cfg.real("grid.t_end_ns") * 1e-9;
  c.grid.dt_s = cfg.real("grid.dt_ns") * 1e-9;
  c.grid.nz = cfg.integer("grid.nz");
  return c;
}

Output compute(std::string_view id, const config::Config& cfg, std::uint64_t seed) {
  info(id);
  const std::string prefix = std::string(id) + ": ";
  try {
    return dispatch(id, cfg, seed);
  } catch (const FitError& e) {
    throw FitError(prefix + e.what());
  } catch (const SolverError& e) {
    throw SolverError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  }
}

std::string render_csv(std::string_view id, const config::Config& cfg, std::uint64_t seed,
                       const Table& table) {
  std::ostringstream os;
  const auto& si = info(id);
  os << "# nfmem scenario=" << id << " figure=" << si.figure << " seed=" << seed << '\n';
  os << "# digest=fnv1a64:" << cfg.digest(std::string(id) + "#" + std::to_string(seed)) << '\n';
  for (const auto& [k, v] : cfg.entries()) os << "# " << k << '=' << v << '\n';
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    os << (c ? "," : "") << table.columns[c];
  }
  os << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.data.size(); ++c) {
      os << (c ? "," : "") << config::format_number(table.data[c][r]);
    }
    os << '\n';
  }
  return os.str();
}

nlohmann::ordered_json summary_record(std::string_view id, const config::Config& cfg,
                                      std::uint64_t seed, const Output& out) {
  const auto& si = info(id);
  ordered_json j;
  j["scenario"] = si.id;
  j["figure"] = si.figure;
  j["headline"] = si.headline;
  j["seed"] = seed;
  j["digest"] = "fnv1a64:" + cfg.digest(std::string(id) + "#" + std::to_string(seed));
  j["columns"] = out.table.columns;
  j["summary"] = out.summary;
  ordered_json c;
  for (const auto& [k, v] : cfg.entries()) c[k] = v;
  j["config"] = c;
  return j;
}

std::string summary_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".summary.json");
  return p.string();
}

void write_atomic(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DomainError("cannot write '" + tmp + "'");
    os << contents;
    os.flush();
    if (!os) throw DomainError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DomainError("cannot rename onto '" + path + "': " + ec.message());
  }
}

nlohmann::ordered_json run_scenario(const Request& r) {
  const auto out = compute(r.id, r.cfg, r.seed);
  const std::string path = r.out_path.empty() ? r.id + ".csv" : r.out_path;
  write_atomic(path, render_csv(r.id, r.cfg, r.seed, out.table));
  auto record = summary_record(r.id, r.cfg, r.seed, out);
  write_atomic(summary_path(path), record.dump(2) + "\n");
  return record;
}

}  // namespace nfmem::scenario
