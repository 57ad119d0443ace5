#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nfmem/config.hpp"
#include "nfmem/error.hpp"
#include "nfmem/fitkit.hpp"
#include "nfmem/scenario.hpp"

using namespace nfmem;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nfmem_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("catalog: ids, order and documentation") {
  const std::vector<std::string> ids = {"fig1b", "fig1c", "fig2",  "fig3a",    "fig3b", "fig3c",
                                        "fig4a", "fig4b", "fig4c", "mode_scan", "custom"};
  const auto& cat = scenario::catalog();
  REQUIRE(cat.size() == ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    CHECK(cat[i].id == ids[i]);
    CHECK_FALSE(cat[i].figure.empty());
    CHECK_FALSE(cat[i].headline.empty());
    for (const auto& key : cat[i].keys) {
      const auto& p = config::spec(key);
      CAPTURE(key);
      CHECK_FALSE(p.unit.empty());
      CHECK_FALSE(p.doc.empty());
    }
  }
  CHECK(scenario::info("fig3b").headline.find("10%") != std::string::npos);
  CHECK(scenario::info("fig3b").uses_seed);
  CHECK_THROWS_AS(scenario::info("fig5"), DomainError);
  for (const auto& p : config::parameter_table()) CHECK_FALSE(p.unit.empty());
}

TEST_CASE("number formatting") {
  CHECK(config::format_number(0.5) == "0.5");
  CHECK(config::format_number(-0.0) == "0");
  CHECK(config::format_number(1e11) == "100000000000");
  CHECK(config::format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(config::format_number(1.20235e-9) == "1.20235e-09");
}

TEST_CASE("config: overrides, types and canonical values") {
  config::Config c;
  c.set("control.power_mW", "1.60");
  CHECK(c.text("control.power_mW") == "1.6");
  CHECK(c.real("control.power_mW") == 1.6);
  c.set_assignment("grid.nz=200");
  CHECK(c.integer("grid.nz") == 200);
  c.set("probe.shape", "gaussian");
  CHECK(c.choice("probe.shape") == "gaussian");
  c.set("fig2.powers_mW", "0.5, 1.0,2");
  CHECK(c.list("fig2.powers_mW") == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(c.text("fig2.powers_mW") == "0.5,1,2");

  CHECK_THROWS_AS(c.set("control.power", "1"), DomainError);
  CHECK_THROWS_AS(c.set("control.power_mW", "one"), DomainError);
  CHECK_THROWS_AS(c.set("control.power_mW", "1.5mW"), DomainError);
  CHECK_THROWS_AS(c.set("grid.nz", "2.5"), DomainError);
  CHECK_THROWS_AS(c.set("probe.shape", "triangle"), DomainError);
  CHECK_THROWS_AS(c.set("fig2.powers_mW", "1,,2"), DomainError);
  CHECK_THROWS_AS(c.set_assignment("control.power_mW"), DomainError);
  CHECK_THROWS_AS(c.real("grid.nz"), DomainError);
}

TEST_CASE("config: INI files") {
  const auto dir = scratch_dir("ini");
  const auto path = dir / "run.ini";
  std::ofstream(path) << "[control]\npower_mW = 1.0\nangle_deg = 20\n[medium]\nod = 5\n";
  auto c = scenario::default_config("fig3b");
  c.load_ini(path.string());
  CHECK(c.real("control.power_mW") == 1.0);
  CHECK(c.real("control.angle_deg") == 20.0);
  CHECK(c.real("medium.od") == 5.0);
  c.set_assignment("medium.od=4");  // --set wins over the file
  CHECK(c.real("medium.od") == 4.0);

  std::ofstream(dir / "bad.ini") << "[control]\npowr_mW = 1\n";
  CHECK_THROWS_AS(c.load_ini((dir / "bad.ini").string()), DomainError);
  CHECK_THROWS_AS(c.load_ini((dir / "missing.ini").string()), DomainError);
}

TEST_CASE("config digest") {
  const auto a = scenario::default_config("fig3b");
  const auto b = scenario::default_config("fig3b");
  CHECK(a.digest("fig3b#1") == b.digest("fig3b#1"));
  CHECK(a.digest("fig3b#1").size() == 16);
  CHECK(a.digest("fig3b#1") != a.digest("fig3b#2"));
  auto c = a;
  c.set("control.power_mW", "0.6");
  CHECK(c.digest("fig3b#1") != a.digest("fig3b#1"));
  // Equivalent spellings of a value are the same configuration.
  c.set("control.power_mW", "5e-1");
  CHECK(c.digest("fig3b#1") == a.digest("fig3b#1"));
  // FNV-1a 64 reference vectors.
  CHECK(config::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(config::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(config::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("scenario defaults overlay the table") {
  CHECK(scenario::default_config("fig4b").real("magnetic.b_field_G") == 0.4);
  CHECK(scenario::default_config("fig4c").real("magnetic.b_field_G") == 0.6);
  CHECK_THROWS_AS(scenario::default_config("nope"), DomainError);
}

TEST_CASE("fig1c: the generated curve fits back to OD 3 through its CSV") {
  const auto cfg = scenario::default_config("fig1c");
  const auto out = scenario::compute("fig1c", cfg, 1);
  std::istringstream csv(scenario::render_csv("fig1c", cfg, 1, out.table));
  fitkit::FitProblem p;
  p.model = fitkit::ModelId::lorentzian_od;
  p.data = fitkit::read_csv(csv);
  CHECK(p.data.size() == static_cast<std::size_t>(cfg.integer("sweep.detuning_points")));
  const auto r = fitkit::fit(p);
  CHECK(r.converged);
  CHECK(std::abs(r.parameters[0] - 3.0) <= 0.01);
  CHECK(r.parameters[1] == doctest::Approx(6.8).epsilon(1e-6));
  CHECK(out.summary["od"].get<double>() == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("fig4b and fig4c: revival times") {
  const auto b = scenario::compute("fig4b", scenario::default_config("fig4b"), 1);
  const auto& t = b.summary["revival_times_us"];
  REQUIRE(t.size() >= 2);
  CHECK(t[0].get<double>() == doctest::Approx(3.57).epsilon(0.005));
  CHECK(t[1].get<double>() == doctest::Approx(7.14).epsilon(0.005));
  const auto c = scenario::compute("fig4c", scenario::default_config("fig4c"), 1);
  CHECK(c.summary["revival_times_us"][0].get<double>() == doctest::Approx(2.38).epsilon(0.005));
}

TEST_CASE("mode_scan: surface intensity peaks near 400 nm") {
  const auto out = scenario::compute("mode_scan", scenario::default_config("mode_scan"), 1);
  CHECK(std::abs(out.summary["argmax_diameter_nm"].get<double>() - 400.0) <= 30.0);
  CHECK(out.table.columns.front() == "diameter_nm");
  CHECK(out.table.rows() == 111);
}

TEST_CASE("fig3b: efficiency band, passivity and refinement") {
  const auto out = scenario::compute("fig3b", scenario::default_config("fig3b"), 1);
  const double eta = out.summary["efficiency"].get<double>();
  CHECK(eta >= 0.05);
  CHECK(eta <= 0.20);
  CHECK(out.summary["passive"].get<bool>());
  CHECK(out.summary["refinement"]["converged"].get<bool>());
}

TEST_CASE("errors keep their type and gain the scenario id") {
  auto cfg = scenario::default_config("fig3b");
  cfg.set("grid.dt_ns", "5");
  try {
    scenario::compute("fig3b", cfg, 1);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).rfind("fig3b: ", 0) == 0);
  }
  cfg = scenario::default_config("fig2");
  cfg.set("fig2.powers_mW", "");
  CHECK_THROWS_AS(scenario::compute("fig2", cfg, 1), DomainError);
  CHECK_THROWS_AS(scenario::compute("fig9", cfg, 1), DomainError);
}

TEST_CASE("every scenario runs with defaults, fast, with a well-formed CSV") {
  for (const auto& s : scenario::catalog()) {
    CAPTURE(s.id);
    const auto cfg = scenario::default_config(s.id);
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = scenario::compute(s.id, cfg, 1);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 60.0);
    CHECK(out.table.rows() > 0);
    for (const auto& col : out.table.data) CHECK(col.size() == out.table.rows());
    const auto csv = scenario::render_csv(s.id, cfg, 1, out.table);
    CHECK(csv.rfind("# nfmem scenario=" + s.id, 0) == 0);
    CHECK(csv.find("# digest=fnv1a64:" + cfg.digest(s.id + "#1")) != std::string::npos);
    const auto rec = scenario::summary_record(s.id, cfg, 1, out);
    CHECK(rec["scenario"] == s.id);
    CHECK(rec["config"].size() == cfg.entries().size());
  }
}

TEST_CASE("identical inputs give byte-identical files") {
  const auto dir = scratch_dir("determinism");
  for (const std::string id : {"fig1b", "fig3b", "fig4a"}) {
    scenario::Request r;
    r.id = id;
    r.cfg = scenario::default_config(id);
    r.cfg.set("synthetic.noise", "0.01");
    r.seed = 7;
    r.out_path = (dir / (id + "_a.csv")).string();
    scenario::run_scenario(r);
    r.out_path = (dir / (id + "_b.csv")).string();
    scenario::run_scenario(r);
    CHECK(slurp(dir / (id + "_a.csv")) == slurp(dir / (id + "_b.csv")));
    CHECK(fs::exists(dir / (id + "_a.summary.json")));
    r.seed = 8;
    r.out_path = (dir / (id + "_c.csv")).string();
    scenario::run_scenario(r);
    CHECK(slurp(dir / (id + "_a.csv")) != slurp(dir / (id + "_c.csv")));
  }
  CHECK(scenario::summary_path("out/fig1b.csv") == "out/fig1b.summary.json");
  CHECK(scenario::summary_path("run") == "run.summary.json");
}
