#pragma once

// Photon-counting noise model for the retrieved pulse: Poisson signal and background per shot.
//
// Generator: std::mt19937_64 seeded with the run seed; each shot draws the signal count and
// then the background count from std::poisson_distribution.

#include <cstdint>
#include <vector>

namespace nfmem::counting {

struct CountingModel {
  double mean_photons_in = 0.6;
  double efficiency = 0.10;
  double background_per_window = 0.003;
  std::int64_t n_shots = 100000;
  double window_s = 200e-9;

  void validate() const;
};

struct CountingResult {
  std::vector<std::int64_t> signal_counts;
  std::vector<std::int64_t> background_counts;
  double mean_signal = 0.0;
  double mean_background = 0.0;
  /// mean signal / mean background; +inf when no background was counted, 0 without signal.
  double snr = 0.0;
  /// Delta-method standard error of the ratio; +inf when undefined.
  double snr_stderr = 0.0;
};

/// mean_photons_in * efficiency / background_per_window (+inf for zero background).
double analytic_snr(const CountingModel& model);

CountingResult simulate_counting(const CountingModel& model, std::uint64_t seed);

}  // namespace nfmem::counting
