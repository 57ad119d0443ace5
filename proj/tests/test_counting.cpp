#include <doctest.h>

#include <cmath>
#include <limits>

#include "nfmem/counting.hpp"
#include "nfmem/error.hpp"

using namespace nfmem;
using namespace nfmem::counting;

TEST_CASE("Monte Carlo SNR converges to the analytic ratio") {
  CountingModel m;
  CHECK(analytic_snr(m) == doctest::Approx(20.0));
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto r = simulate_counting(m, seed);
    CAPTURE(seed);
    CHECK(std::isfinite(r.snr_stderr));
    CHECK(std::abs(r.snr - 20.0) < 3 * r.snr_stderr);
    CHECK(r.mean_signal == doctest::Approx(0.06).epsilon(0.05));
    CHECK(r.signal_counts.size() == 100000);
  }
}

TEST_CASE("sentinels") {
  CountingModel m;
  m.background_per_window = 0.0;
  CHECK(analytic_snr(m) == std::numeric_limits<double>::infinity());
  const auto r = simulate_counting(m, 7);
  CHECK(r.mean_background == 0.0);
  CHECK(r.snr == std::numeric_limits<double>::infinity());
  CHECK(r.snr_stderr == std::numeric_limits<double>::infinity());

  m = CountingModel{};
  m.efficiency = 0.0;
  CHECK(analytic_snr(m) == 0.0);
  CHECK(simulate_counting(m, 7).snr == 0.0);
}

TEST_CASE("same seed, same counts") {
  CountingModel m;
  m.n_shots = 5000;
  const auto a = simulate_counting(m, 42);
  const auto b = simulate_counting(m, 42);
  const auto c = simulate_counting(m, 43);
  CHECK(a.signal_counts == b.signal_counts);
  CHECK(a.background_counts == b.background_counts);
  CHECK(a.snr == b.snr);
  CHECK(a.signal_counts != c.signal_counts);
}

TEST_CASE("validation") {
  CountingModel m;
  m.efficiency = 1.5;
  CHECK_THROWS_AS(simulate_counting(m, 1), DomainError);
  m = CountingModel{};
  m.n_shots = 0;
  CHECK_THROWS_AS(simulate_counting(m, 1), DomainError);
  m = CountingModel{};
  m.background_per_window = -0.1;
  CHECK_THROWS_AS(m.validate(), DomainError);
}
