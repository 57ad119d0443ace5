#pragma once

// Time-dependent weak-probe Maxwell-Bloch propagation through the Lambda medium: slow light,
// dynamic storage and retrieval.
//
// Retarded frame tau = t - z/c, normalized coordinate zeta = z/L:
//   dE/dzeta  = i (OD/2) P
//   dP/dtau   = -(Gamma/2 - i delta) P + i (Gamma/2) E + i (Omega(tau)/2) S
//   dS/dtau   = -(gamma(tau) - i delta_2) S + i (Omega(tau)/2) P
// with gamma(tau) = gamma_gs + kappa Omega_d(tau)^2. The steady state reproduces
// eit::susceptibility, so a long pulse sees exp(i OD chi / 2).

#include <complex>
#include <vector>

#include "nfmem/eit.hpp"

namespace nfmem::propagation {

using complex = std::complex<double>;

enum class PulseShape {
  exponential_rising,  // intensity exp(t ln2 / FWHM) for t <= 0, zero after: peaks and ends at 0
  gaussian,            // centered at 0
  square,              // on over [-FWHM, 0]
};

struct ProbePulse {
  double mean_photon_number = 0.6;
  double fwhm_s = 60e-9;
  PulseShape shape = PulseShape::exponential_rising;
  double detuning_rad_per_s = 0.0;

  void validate() const;
  /// Intensity shape with unit peak.
  double shape_at(double t_s) const;
};

/// Control Rabi frequency vs time. Without storage the control is constant. With storage it is
/// ramped down (raised cosine) starting at switch_off_s and back up starting at switch_on_s.
struct ControlSchedule {
  double rabi_rad_per_s = 0.0;
  /// Rabi frequency of the full control intensity, used for control-induced dephasing.
  /// Negative means "same as rabi_rad_per_s"; differs when only part of the control couples.
  double dephasing_rabi_rad_per_s = -1.0;
  bool storage = false;
  double switch_off_s = 0.0;
  double switch_on_s = 120e-9;
  double ramp_s = 20e-9;
  /// Added to the probe detuning in the ground-state coherence (control detuning).
  double two_photon_offset_rad_per_s = 0.0;

  void validate() const;
  double envelope(double t_s) const;
};

struct PropagationGrid {
  double t_start_s = -720e-9;
  double t_end_s = 720e-9;
  double dt_s = 0.5e-9;
  int nz = 100;

  PropagationGrid refined() const;
};

struct Medium {
  double od = 3.0;
  double length_m = 5e-3;
};

struct PropagationCase {
  ProbePulse probe;
  ControlSchedule control;
  Medium medium;
  eit::LambdaScheme scheme;
  PropagationGrid grid;
};

struct PropagationResult {
  std::vector<double> time_s;       // retarded time; lab time at the output is time_s + transit_s
  std::vector<double> input_flux;   // photons/s, integrates to the mean photon number
  std::vector<double> output_flux;  // photons/s at the fiber output
  std::vector<double> control_envelope;
  std::vector<double> z_m;
  std::vector<complex> spinwave;    // S(z) when the control reaches zero (end of run otherwise)
  double spinwave_time_s = 0.0;
  double transit_s = 0.0;           // L / c
  double dt_s = 0.0;
  double readout_start_s = 0.0;

  double input_photons = 0.0;
  double output_photons = 0.0;
  double transmission = 0.0;          // output / input, whole run
  double group_delay_s = 0.0;         // output minus input flux centroid, retarded frame
  double leak_fraction = 0.0;         // output before readout_start / input
  double retrieval_efficiency = 0.0;  // output after readout_start / input
};

/// Throws DomainError for invalid inputs and SolverError when the grid under-resolves the pulse
/// (< 20 steps per FWHM, < 50 z-steps) or the step violates dt * max rate <= 0.5.
PropagationResult propagate_pulse(const PropagationCase& c);

/// Retrieved photons in [t1, t2] over the reference (od = 0) input photons.
double storage_efficiency(const PropagationResult& result, double t1_s, double t2_s);

struct RefinementReport {
  double coarse = 0.0;
  double fine = 0.0;
  double relative_change = 0.0;
  bool converged = false;
};

/// Re-runs with dt/2 and 2 nz and compares retrieval efficiency (storage) or transmission.
RefinementReport check_refinement(const PropagationCase& c, double tolerance = 0.01);

/// Independent runs, OpenMP-parallel across cases; results in input order.
std::vector<PropagationResult> propagate_batch(const std::vector<PropagationCase>& cases);

namespace serial {
std::vector<PropagationResult> propagate_batch(const std::vector<PropagationCase>& cases);
}

}  // namespace nfmem::propagation
