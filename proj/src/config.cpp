#include "nfmem/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nfmem/error.hpp"

namespace nfmem::config {
namespace {

std::vector<ParamSpec> build_table() {
  using K = Kind;
  return {
      // Fiber and mode scan.
      {"fiber.diameter_nm", K::real, "400", "nm", "nanofiber diameter", {}},
      {"fiber.wavelength_nm", K::real, "852", "nm", "guided wavelength", {}},
      {"fiber.n_core", K::real, "1.4525", "1", "core (silica) refractive index", {}},
      {"fiber.n_clad", K::real, "1", "1", "cladding (vacuum) refractive index", {}},
      {"scan.d_min_nm", K::real, "250", "nm", "mode_scan: smallest diameter", {}},
      {"scan.d_max_nm", K::real, "800", "nm", "mode_scan: largest diameter", {}},
      {"scan.d_step_nm", K::real, "5", "nm", "mode_scan: diameter step", {}},
      {"scan.power_nW", K::real, "1", "nW", "mode_scan: guided power", {}},
      // Atomic cloud.
      {"cloud.density_cm3", K::real, "1e11", "cm^-3", "peak atomic density", {}},
      {"cloud.temperature_uK", K::real, "200", "uK", "cloud temperature", {}},
      {"cloud.length_mm", K::real, "5", "mm", "overlap length with the fiber waist", {}},
      {"cloud.shell_radii", K::real, "4", "fiber radii", "annulus width for atom counting", {}},
      {"cloud.density_model", K::choice, "uniform", "enum", "surface density model",
       {"uniform", "vdw_depleted"}},
      {"cloud.c3_kHz_um3", K::real, "1.16", "kHz um^3", "van der Waals C3/h", {}},
      // Absorption laws.
      {"absorption.alpha0_L", K::real, "6.15384615385", "1", "unsaturated optical depth alpha0 L",
       {}},
      {"absorption.p_sat_nW", K::real, "1.3", "nW", "saturation power", {}},
      {"absorption.k", K::real, "1", "1", "saturation exponent", {}},
      {"absorption.od", K::real, "3", "1", "resonant optical depth on |g> -> |e>", {}},
      {"absorption.gamma_MHz", K::real, "6.8", "MHz", "fitted linewidth Gamma/2pi", {}},
      {"absorption.p_single_pW", K::real, "3.8", "pW", "power scattered by one saturated atom",
       {}},
      {"sweep.p_max_nW", K::real, "50", "nW", "fig1b: largest probe power", {}},
      {"sweep.power_points", K::integer, "101", "1", "fig1b: number of powers", {}},
      {"sweep.span_MHz", K::real, "30", "MHz", "spectra: detuning half-span", {}},
      {"sweep.detuning_points", K::integer, "241", "1", "spectra: number of detunings", {}},
      {"synthetic.noise", K::real, "0", "transmission", "absolute Gaussian noise on fitted curves",
       {}},
      // Lambda scheme and calibration.
      {"scheme.gamma_MHz", K::real, "6.8", "MHz", "excited-state linewidth Gamma/2pi", {}},
      {"calibration.mode", K::choice, "anchors", "enum",
       "anchors: solve from the operating points; explicit: use the values below",
       {"anchors", "explicit"}},
      {"calibration.dephasing_model", K::choice, "control_induced", "enum",
       "ground-state decay: control_induced (gamma_dark + kappa Omega^2) or constant",
       {"control_induced", "constant"}},
      {"calibration.transparency", K::real, "0.75", "1", "anchor: peak EIT transmission", {}},
      {"calibration.transparency_power_mW", K::real, "1.6", "mW", "anchor: control power", {}},
      {"calibration.od", K::real, "3", "1", "anchor: optical depth", {}},
      {"calibration.delay_ns", K::real, "60", "ns", "anchor: group delay", {}},
      {"calibration.delay_power_mW", K::real, "0.5", "mW", "anchor: control power for the delay",
       {}},
      {"calibration.rabi_factor", K::real, "0.133106", "1",
       "explicit: Omega_c / (Gamma0 sqrt(I/2Isat))", {}},
      {"calibration.gamma_gs_per_s", K::real, "211864", "1/s", "explicit: dark ground-state decay",
       {}},
      {"calibration.kappa_s", K::real, "1.20235e-09", "s",
       "explicit: control-induced dephasing coefficient", {}},
      // Control field.
      {"control.power_mW", K::real, "0.5", "mW", "control power", {}},
      {"control.waist_um", K::real, "400", "um", "control beam waist", {}},
      {"control.angle_deg", K::real, "13", "deg", "angle between control and fiber", {}},
      {"control.polarization_deg", K::real, "0", "deg",
       "control polarization angle (0 = vertical, orthogonal to the signal)", {}},
      {"control.switch_off_ns", K::real, "0", "ns", "storage: start of the switch-off ramp", {}},
      {"control.switch_on_ns", K::real, "120", "ns", "storage: start of the switch-on ramp", {}},
      {"control.ramp_ns", K::real, "20", "ns", "storage: ramp duration", {}},
      // Probe and medium.
      {"probe.photons", K::real, "0.6", "photons", "mean photon number per pulse", {}},
      {"probe.fwhm_ns", K::real, "60", "ns", "pulse intensity FWHM", {}},
      {"probe.shape", K::choice, "exponential_rising", "enum", "pulse shape",
       {"exponential_rising", "gaussian", "square"}},
      {"probe.detuning_MHz", K::real, "0", "MHz", "probe detuning delta/2pi", {}},
      {"medium.od", K::real, "3", "1", "optical depth of the EIT transition", {}},
      {"medium.length_mm", K::real, "5", "mm", "medium length", {}},
      {"grid.t_start_ns", K::real, "-720", "ns", "propagation window start", {}},
      {"grid.t_end_ns", K::real, "720", "ns", "propagation window end", {}},
      {"grid.dt_ns", K::real, "0.5", "ns", "time step", {}},
      {"grid.nz", K::integer, "100", "1", "spatial steps", {}},
      {"custom.storage", K::choice, "off", "enum", "custom: switch the control off and on",
       {"off", "on"}},
      // Sweeps.
      {"fig2.powers_mW", K::list, "0.2,0.5,1,1.6", "mW", "fig2: control powers", {}},
      {"fig3a.powers_mW", K::list, "0.5,1,1.6", "mW", "fig3a: control powers", {}},
      {"fig3c.angles_deg", K::list, "0,15,30,45,60,75,90,105,120,135,150,165,180", "deg",
       "fig3c: control polarization angles", {}},
      // Counting.
      {"counting.background", K::real, "0.003", "counts/window", "background per read-out window",
       {}},
      {"counting.shots", K::integer, "100000", "1", "number of simulated shots", {}},
      {"counting.window_ns", K::real, "200", "ns", "read-out window", {}},
      // Decoherence and revivals.
      {"decoherence.zeeman_broadening_kHz", K::real, "100", "kHz",
       "inhomogeneous Zeeman broadening", {}},
      {"decoherence.tau_D_us", K::real, "0", "us", "dephasing constant (0 = derived)", {}},
      {"decoherence.tau_T_us", K::real, "0", "us", "transit constant (0 = derived)", {}},
      {"decay.t_max_us", K::real, "15", "us", "fig4a: longest storage time", {}},
      {"decay.points", K::integer, "151", "1", "fig4a: number of storage times", {}},
      {"decay.fit_mode", K::choice, "free", "enum", "fig4a: fit tau_T or hold it at the transit time",
       {"free", "transit_fixed"}},
      {"magnetic.b_field_G", K::real, "0.4", "G", "field along the fiber", {}},
      {"magnetic.m_max", K::integer, "3", "1", "populated m = -m_max..m_max", {}},
      {"magnetic.delta_m", K::integer, "0", "1", "m' - m of the stored coherence", {}},
      {"magnetic.populations", K::list, "", "1",
       "weights for m = -m_max..m_max, normalized (empty = flat)", {}},
      {"revival.t_max_us", K::real, "15", "us", "fig4b/c: longest storage time", {}},
      {"revival.dt_ns", K::real, "10", "ns", "fig4b/c: time step", {}},
  };
}

bool parse_real(const std::string& s, double& v) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str() + first, &end);
  if (end == s.c_str() + first) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0' && std::isfinite(v);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::string canonical(const ParamSpec& p, const std::string& raw) {
  const std::string value = trim(raw);
  auto bad = [&](const char* what) {
    return DomainError("parameter " + p.key + ": '" + value + "' is not " + what);
  };
  switch (p.kind) {
    case Kind::real: {
      double v = 0.0;
      if (!parse_real(value, v)) throw bad("a number");
      return format_number(v);
    }
    case Kind::integer: {
      double v = 0.0;
      if (!parse_real(value, v) || v != std::floor(v) || std::abs(v) > 2e9) {
        throw bad("an integer");
      }
      return std::to_string(static_cast<long long>(v));
    }
    case Kind::choice:
      if (std::find(p.choices.begin(), p.choices.end(), value) == p.choices.end()) {
        std::string opts;
        for (const auto& c : p.choices) opts += (opts.empty() ? "" : "|") + c;
        throw DomainError("parameter " + p.key + ": '" + value + "' is not one of " + opts);
      }
      return value;
    case Kind::list: {
      std::string out;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        double v = 0.0;
        if (!parse_real(item, v)) throw bad("a comma-separated list of numbers");
        out += (out.empty() ? "" : ",") + format_number(v);
      }
      return out;
    }
  }
  return value;
}

}  // namespace

const std::vector<ParamSpec>& parameter_table() {
  static const std::vector<ParamSpec> table = build_table();
  return table;
}

const ParamSpec& spec(std::string_view key) {
  for (const auto& p : parameter_table()) {
    if (p.key == key) return p;
  }
  throw DomainError("unknown parameter '" + std::string(key) + "'");
}

std::string format_number(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Config::Config() {
  for (const auto& p : parameter_table()) values_[p.key] = canonical(p, p.default_value);
}

void Config::set(const std::string& key, const std::string& value) {
  const auto& p = spec(key);
  values_[p.key] = canonical(p, value);
}

void Config::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw DomainError("override '" + assignment + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void Config::load_ini(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw DomainError("config file: " + std::string(e.what()));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      set(section, body.data());
      continue;
    }
    for (const auto& [name, leaf] : body) set(section + "." + name, leaf.data());
  }
}

const std::string& Config::text(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw DomainError("unknown parameter '" + std::string(key) + "'");
  return it->second;
}

double Config::real(std::string_view key) const {
  if (spec(key).kind != Kind::real) throw DomainError(std::string(key) + " is not a number");
  return std::strtod(text(key).c_str(), nullptr);
}

int Config::integer(std::string_view key) const {
  if (spec(key).kind != Kind::integer) throw DomainError(std::string(key) + " is not an integer");
  return std::stoi(text(key));
}

const std::string& Config::choice(std::string_view key) const {
  if (spec(key).kind != Kind::choice) throw DomainError(std::string(key) + " is not a choice");
  return text(key);
}

std::vector<double> Config::list(std::string_view key) const {
  if (spec(key).kind != Kind::list) throw DomainError(std::string(key) + " is not a list");
  std::vector<double> out;
  std::stringstream ss(text(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::strtod(item.c_str(), nullptr));
  return out;
}

std::vector<std::pair<std::string, std::string>> Config::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : parameter_table()) out.emplace_back(p.key, values_.at(p.key));
  return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t h) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string Config::digest(const std::string& context) const {
  std::uint64_t h = fnv1a64(context);
  for (const auto& [k, v] : entries()) h = fnv1a64(k + "=" + v + "\n", h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nfmem::config
