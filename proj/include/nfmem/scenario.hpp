#pragma once

// Scenario catalog and runner: each figure of the experiment as a CSV dataset plus a JSON
// summary of headline scalars and the resolved configuration.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nfmem/config.hpp"
#include "nfmem/decoherence.hpp"
#include "nfmem/eit.hpp"
#include "nfmem/propagation.hpp"
#include "nfmem/waveguide.hpp"

namespace nfmem::scenario {

struct ScenarioInfo {
  std::string id;
  std::string figure;
  std::string title;
  std::string headline;
  std::vector<std::string> keys;  // parameters the scenario reads
  std::vector<std::pair<std::string, std::string>> defaults;  // scenario-specific defaults
  bool uses_seed = false;
};

/// Stable order: fig1b, fig1c, fig2, fig3a, fig3b, fig3c, fig4a, fig4b, fig4c, mode_scan, custom.
const std::vector<ScenarioInfo>& catalog();
/// Throws DomainError for unknown ids.
const ScenarioInfo& info(std::string_view id);

/// Table defaults overlaid with the scenario's own defaults.
config::Config default_config(std::string_view id);

struct Table {
  std::vector<std::string> columns;       // "name_unit"
  std::vector<std::vector<double>> data;  // column-major

  void add(std::string name, std::vector<double> values);
  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
};

struct Output {
  Table table;
  nlohmann::ordered_json summary;  // headline scalars
};

/// Pure computation, no file output. Errors are rethrown with the scenario id prepended,
/// keeping their type.
Output compute(std::string_view id, const config::Config& cfg, std::uint64_t seed);

/// Comment block (scenario, seed, digest, resolved config), header row, rows at %.12g.
std::string render_csv(std::string_view id, const config::Config& cfg, std::uint64_t seed,
                       const Table& table);

/// Full record: scenario, figure, seed, digest, summary, config.
nlohmann::ordered_json summary_record(std::string_view id, const config::Config& cfg,
                                      std::uint64_t seed, const Output& out);

/// "out/fig1b.csv" -> "out/fig1b.summary.json".
std::string summary_path(const std::string& csv_path);

/// Write to a temporary sibling, then rename over the target.
void write_atomic(const std::string& path, const std::string& contents);

struct Request {
  std::string id;
  config::Config cfg;
  std::uint64_t seed = 1;
  std::string out_path;  // empty: "<id>.csv"
};

/// compute + render + atomic writes of the CSV and its summary. Returns the summary record.
nlohmann::ordered_json run_scenario(const Request& request);

// Configuration -> physics inputs, shared with the tests.
waveguide::FiberSpec fiber_from(const config::Config& cfg);
decoherence::DecoherenceParams decoherence_from(const config::Config& cfg);
eit::Calibration calibration_from(const config::Config& cfg);
eit::LambdaScheme scheme_from(const config::Config& cfg, const eit::Calibration& cal);
double rabi_at(const config::Config& cfg, const eit::Calibration& cal, double power_W);
propagation::PropagationCase case_from(const config::Config& cfg, const eit::Calibration& cal,
                                       bool storage);

}  // namespace nfmem::scenario
