#include "nfmem/counting.hpp"

#include <cmath>
#include <random>

#include "nfmem/constants.hpp"
#include "nfmem/error.hpp"

namespace nfmem::counting {
namespace {

std::int64_t draw(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

}  // namespace

void CountingModel::validate() const {
  if (!(mean_photons_in >= 0.0)) throw DomainError("mean photon number must be >= 0");
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw DomainError("efficiency must lie in [0,1]");
  if (!(background_per_window >= 0.0)) throw DomainError("background must be >= 0");
  if (n_shots < 1) throw DomainError("need at least one shot");
  if (!(window_s >= 0.0)) throw DomainError("window must be >= 0");
}

double analytic_snr(const CountingModel& m) {
  m.validate();
  const double signal = m.mean_photons_in * m.efficiency;
  if (m.background_per_window == 0.0) return signal > 0.0 ? constants::infinity : 0.0;
  return signal / m.background_per_window;
}

CountingResult simulate_counting(const CountingModel& m, std::uint64_t seed) {
  m.validate();
  std::mt19937_64 rng(seed);
  const double mu_s = m.mean_photons_in * m.efficiency;
  const double mu_b = m.background_per_window;

  CountingResult out;
  const auto n = static_cast<std::size_t>(m.n_shots);
  out.signal_counts.reserve(n);
  out.background_counts.reserve(n);
  double sum_s = 0.0, sum_b = 0.0, sq_s = 0.0, sq_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = draw(rng, mu_s);
    const auto b = draw(rng, mu_b);
    out.signal_counts.push_back(s);
    out.background_counts.push_back(b);
    sum_s += static_cast<double>(s);
    sum_b += static_cast<double>(b);
    sq_s += static_cast<double>(s * s);
    sq_b += static_cast<double>(b * b);
  }
  const double nd = static_cast<double>(n);
  out.mean_signal = sum_s / nd;
  out.mean_background = sum_b / nd;

  if (out.mean_signal == 0.0) {
    out.snr = 0.0;
    out.snr_stderr = 0.0;
    return out;
  }
  if (out.mean_background == 0.0) {
    out.snr = constants::infinity;
    out.snr_stderr = constants::infinity;
    return out;
  }
  out.snr = out.mean_signal / out.mean_background;
  const double den = n > 1 ? nd - 1.0 : 1.0;
  const double var_s = std::max(sq_s - nd * out.mean_signal * out.mean_signal, 0.0) / den;
  const double var_b = std::max(sq_b - nd * out.mean_background * out.mean_background, 0.0) / den;
  const double rel2 = var_s / (nd * out.mean_signal * out.mean_signal) +
                      var_b / (nd * out.mean_background * out.mean_background);
  out.snr_stderr = out.snr * std::sqrt(rel2);
  return out;
}

}  // namespace nfmem::counting
