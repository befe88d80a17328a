#include "flatflow/error.hpp"
#include "flatflow/output.hpp"
#include "flatflow/run_config.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

using namespace flatflow;
using namespace flatflow::testing;

TEST_CASE("defaults round-trip through the text form") {
  const RunConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(parse_run_config(serialize(c)) == c);
  CHECK(parse_run_config("") == c);
}

TEST_CASE("every field round-trips") {
  RunConfig c;
  c.nx_cells = 96;
  c.ny_cells = 80;
  c.dx_length = 0.1 / 3.0;
  c.boundary = Boundary::Periodic;
  c.preset = Preset::PerturbedCircle;
  c.radius_box_fraction = 0.3;
  c.axis_ratio_a = 3.0;
  c.axis_ratio_b = 1.5;
  c.gap_box_fraction = 0.07;
  c.amplitude_relative = 0.2;
  c.wavenumber = 7;
  c.mask_path = "some dir/initial.mask";
  c.h_time = 0.1 / 7.0;
  c.t_end_time = 1.0 / 3.0;
  c.snapshot_early_steps = 4;
  c.snapshot_growth_factor = 2.0;
  c.containment_margin_cells = 3;
  c.perimeter_kind = PerimeterKind::Anisotropic4;
  c.mode = StepMode::Unconstrained;
  c.inner_tol_length = 3e-7;
  c.inner_max_iters = 1234;
  c.lambda_tol_cells = 2;
  c.lambda_bracket_scale = 0.5;
  c.ladder_h_time = {0.04, 0.02, 0.01};
  c.output_dir = "results/a";
  c.write_pgm = true;
  c.seed = 18446744073709551615ULL;
  c.override_resolution_guard = true;
  const RunConfig back = parse_run_config(serialize(c));
  CHECK(back == c);
  CHECK(back.dx_length == c.dx_length);
  CHECK(back.h_time == c.h_time);
  CHECK(back.ladder_h_time == c.ladder_h_time);
  CHECK(back.mask_path == c.mask_path);
  CHECK(back.seed == c.seed);
}

TEST_CASE("comments, whitespace and partial files") {
  const RunConfig c = parse_run_config("# a comment\n\n  preset = ellipse  \nh_time=0.01 # trailing\n");
  CHECK(c.preset == Preset::Ellipse);
  CHECK(c.h_time == 0.01);
  CHECK(c.nx_cells == RunConfig{}.nx_cells);
}

TEST_CASE("malformed configs") {
  CHECK_THROWS_AS(parse_run_config("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("h_time = 0.1\nh_time = 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("h_time\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("h_time = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("nx_cells = 12.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("preset = torus\n"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/flatflow.cfg"), IoError);
}

TEST_CASE("resolution guard") {
  const double dx = 1.0 / 128.0;
  CHECK(resolution_ok(9.0 * dx * dx, dx));
  CHECK(!resolution_ok(8.0 * dx * dx, dx));

  RunConfig c;
  c.h_time = 4.0 * dx * dx;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.override_resolution_guard = true;
  CHECK_NOTHROW(c.validate());

  RunConfig l;
  l.ladder_h_time = {64.0 * dx * dx, 1.0 * dx * dx};
  CHECK_THROWS_AS(l.validate(), ConfigError);
}

TEST_CASE("invalid fields") {
  RunConfig c;
  c.h_time = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.t_end_time = 0.5 * c.h_time;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.radius_box_fraction = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("presets") {
  RunConfig c;
  c.nx_cells = 64;
  c.ny_cells = 64;
  c.dx_length = 1.0 / 64.0;

  SUBCASE("ball") {
    const BinarySet s = make_initial_set(c);
    const double r = 0.25;
    CHECK(std::abs(volume(s) - std::numbers::pi * r * r) <= perimeter(s, PerimeterKind::Isotropic) * c.dx_length);
    CHECK(rotated90(s) == s);
  }
  SUBCASE("ellipse") {
    c.preset = Preset::Ellipse;
    c.radius_box_fraction = 0.3;
    const BinarySet s = make_initial_set(c);
    CHECK(std::abs(volume(s) - std::numbers::pi * 0.3 * 0.15) <= perimeter(s, PerimeterKind::Isotropic) * c.dx_length);
    CHECK(label_components(s).count == 1);
  }
  SUBCASE("two balls") {
    c.preset = Preset::TwoBalls;
    c.radius_box_fraction = 0.2;
    const BinarySet s = make_initial_set(c);
    CHECK(label_components(s).count == 2);
  }
  SUBCASE("perturbed circle") {
    c.preset = Preset::PerturbedCircle;
    const BinarySet s = make_initial_set(c);
    CHECK(isoperimetric_ratio(s) > isoperimetric_ratio(make_initial_set(RunConfig{})));
  }
  SUBCASE("from file") {
    const auto path = std::filesystem::temp_directory_path() / "flatflow_tests" / "preset.mask";
    std::filesystem::create_directories(path.parent_path());
    const BinarySet s = block(c.domain(), 10, 20, 30, 12);
    save_mask(s, path);
    c.preset = Preset::FromFile;
    c.mask_path = path.string();
    CHECK(make_initial_set(c) == s);
    c.nx_cells = 65;
    CHECK_THROWS_AS(make_initial_set(c), ConfigError);
  }
}

TEST_CASE("summary echoes the whole configuration") {
  RunConfig c;
  c.nx_cells = 32;
  c.ny_cells = 32;
  c.dx_length = 1.0 / 32.0;
  c.h_time = 16.0 / (32.0 * 32.0);
  c.t_end_time = 3.0 * c.h_time;
  const FlowTrajectory tr = run(make_initial_set(c), c.flow_config());
  const auto j = nlohmann::json::parse(summary_json(c, tr));
  std::istringstream text(serialize(c));
  std::string line;
  int keys = 0;
  while (std::getline(text, line)) {
    const std::string key = line.substr(0, line.find(" = "));
    CHECK_MESSAGE(j["config"].contains(key), key);
    ++keys;
  }
  CHECK(keys == static_cast<int>(j["config"].size()));
  CHECK(j["run"]["volume_conserved"] == true);

  const std::string csv = steps_csv(tr);
  std::istringstream rows(csv);
  std::getline(rows, line);
  CHECK(std::count(line.begin(), line.end(), ',') + 1 == static_cast<long>(steps_csv_columns().size()));
  int n = 0;
  while (std::getline(rows, line)) ++n;
  CHECK(n == 4);
  CHECK(snapshot_name(0.015625) == "t_0.01562500.mask");
}

TEST_CASE("error documents") {
  const auto j = nlohmann::json::parse(error_json("config", 2, "bad \"value\""));
  CHECK(j["error"] == "config");
  CHECK(j["exit_code"] == 2);
  CHECK(j["message"] == "bad \"value\"");
}
