// nfmem: scenario runner and curve fitter.
//
//   nfmem list [--json]
//   nfmem sim <scenario> [--set key=value]... [--config file.ini] [--out path] [--seed n]
//   nfmem fit <model> --data file.csv [--guess name=value]... [--freeze name]... [--out path]
//
// Exit codes: 0 success, 2 bad arguments, 3 solver failure, 4 fit non-convergence.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nfmem/config.hpp"
#include "nfmem/error.hpp"
#include "nfmem/fitkit.hpp"
#include "nfmem/scenario.hpp"

namespace {

constexpr int kBadArgs = 2;
constexpr int kSolver = 3;
constexpr int kNoConvergence = 4;

using nlohmann::ordered_json;

ordered_json catalog_json() {
  ordered_json out = ordered_json::array();
  for (const auto& s : nfmem::scenario::catalog()) {
    const auto cfg = nfmem::scenario::default_config(s.id);
    ordered_json j;
    j["id"] = s.id;
    j["figure"] = s.figure;
    j["title"] = s.title;
    j["headline"] = s.headline;
    j["uses_seed"] = s.uses_seed;
    ordered_json params = ordered_json::array();
    for (const auto& key : s.keys) {
      const auto& p = nfmem::config::spec(key);
      ordered_json pj;
      pj["key"] = p.key;
      pj["unit"] = p.unit;
      pj["default"] = cfg.text(key);
      pj["doc"] = p.doc;
      if (!p.choices.empty()) pj["choices"] = p.choices;
      params.push_back(pj);
    }
    j["parameters"] = params;
    out.push_back(j);
  }
  return out;
}

void print_catalog() {
  for (const auto& s : nfmem::scenario::catalog()) {
    const auto cfg = nfmem::scenario::default_config(s.id);
    std::cout << s.id << "  [" << s.figure << "]  " << s.title << '\n';
    std::cout << "    target: " << s.headline << '\n';
    for (const auto& key : s.keys) {
      const auto& p = nfmem::config::spec(key);
      std::cout << "    " << p.key << " = " << cfg.text(key) << "  (" << p.unit << ")  " << p.doc
                << '\n';
    }
    std::cout << '\n';
  }
  std::cout << "fit models:\n";
  for (const auto& m : nfmem::fitkit::models()) {
    std::cout << "  " << m.name << "  x[" << m.x_unit << "]  " << m.formula << "\n    params:";
    for (const auto& p : m.parameters) {
      std::cout << ' ' << p.name << (p.unit.empty() ? "" : "[" + p.unit + "]");
    }
    std::cout << '\n';
  }
}

std::pair<std::string, double> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw nfmem::DomainError("expected name=value, got '" + s + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(s.substr(eq + 1), &used);
    if (used != s.size() - eq - 1) throw std::invalid_argument("trailing");
    return {s.substr(0, eq), v};
  } catch (const std::logic_error&) {
    throw nfmem::DomainError("'" + s.substr(eq + 1) + "' is not a number");
  }
}

int run_sim(const std::string& id, const std::vector<std::string>& sets,
            const std::string& config_file, const std::string& out, std::uint64_t seed) {
  nfmem::scenario::Request req;
  req.id = id;
  req.cfg = nfmem::scenario::default_config(id);
  if (!config_file.empty()) req.cfg.load_ini(config_file);
  for (const auto& s : sets) req.cfg.set_assignment(s);
  req.seed = seed;
  req.out_path = out;
  const auto record = nfmem::scenario::run_scenario(req);
  const std::string path = out.empty() ? id + ".csv" : out;
  std::cout << "wrote " << path << " and " << nfmem::scenario::summary_path(path) << '\n';
  std::cout << record["summary"].dump(2) << '\n';
  return 0;
}

int run_fit(const std::string& model_name, const std::string& data,
            const std::vector<std::string>& guesses, const std::vector<std::string>& freeze,
            const std::string& out, int max_iter) {
  nfmem::fitkit::FitProblem p;
  p.model = nfmem::fitkit::model_from_string(model_name);
  const auto& info = nfmem::fitkit::model_info(p.model);
  p.data = nfmem::fitkit::read_csv_file(data);
  p.max_iterations = max_iter;
  for (const auto& pi : info.parameters) p.initial_guess.push_back(pi.default_guess);
  for (const auto& g : guesses) {
    const auto [name, value] = parse_assignment(g);
    bool found = false;
    for (std::size_t i = 0; i < info.parameters.size(); ++i) {
      if (info.parameters[i].name == name) {
        p.initial_guess[i] = value;
        found = true;
      }
    }
    if (!found) throw nfmem::DomainError(model_name + ": unknown parameter '" + name + "'");
  }
  p.frozen.insert(freeze.begin(), freeze.end());
  const auto result = nfmem::fitkit::fit(p);
  auto j = nfmem::fitkit::to_json(result);
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    nfmem::scenario::write_atomic(out, text);
    std::cout << "wrote " << out << '\n';
  }
  if (!result.converged) {
    std::cerr << "nfmem: fit did not converge: " << result.message << '\n';
    return kNoConvergence;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nanofiber EIT quantum-memory simulator"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List scenarios, their parameters and the fit models");
  bool list_json = false;
  list->add_flag("--json", list_json, "Machine-readable catalog");

  auto* sim = app.add_subcommand("sim", "Run a scenario and write CSV + summary JSON");
  std::string scenario_id;
  std::vector<std::string> sets;
  std::string config_file, sim_out;
  std::uint64_t seed = 1;
  sim->add_option("scenario", scenario_id, "Scenario id (see 'list')")->required();
  sim->add_option("--set", sets, "Override a parameter: key=value (repeatable)");
  sim->add_option("--config", config_file, "INI configuration file")->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "CSV output path (default <scenario>.csv)");
  sim->add_option("--seed", seed, "Seed for noise and photon counting");

  auto* fit = app.add_subcommand("fit", "Fit a registered model to CSV data (x,y[,sigma])");
  std::string model_name, data_file, fit_out;
  std::vector<std::string> guesses, freeze;
  int max_iter = 200;
  fit->add_option("model", model_name, "Model id (see 'list')")->required();
  fit->add_option("--data", data_file, "CSV data file")->required()->check(CLI::ExistingFile);
  fit->add_option("--guess", guesses, "Initial value: name=value (repeatable)");
  fit->add_option("--freeze", freeze, "Hold a parameter at its initial value (repeatable)");
  fit->add_option("--out", fit_out, "Write the result JSON here instead of stdout");
  fit->add_option("--max-iter", max_iter, "Iteration limit")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadArgs;
  }

  try {
    if (*list) {
      if (list_json) {
        std::cout << catalog_json().dump(2) << '\n';
      } else {
        print_catalog();
      }
      return 0;
    }
    if (*sim) return run_sim(scenario_id, sets, config_file, sim_out, seed);
    if (*fit) return run_fit(model_name, data_file, guesses, freeze, fit_out, max_iter);
  } catch (const nfmem::DomainError& e) {
    std::cerr << "nfmem: " << e.what() << '\n';
    return kBadArgs;
  } catch (const nfmem::FitError& e) {
    std::cerr << "nfmem: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const nfmem::Error& e) {
    std::cerr << "nfmem: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "nfmem: " << e.what() << '\n';
    return kSolver;
  }
  return kBadArgs;
}
