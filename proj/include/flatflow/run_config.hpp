#pragma once

#include "flatflow/flow.hpp"
#include "flatflow/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace flatflow {

enum class Preset { Ball, Ellipse, TwoBalls, PerturbedCircle, FromFile };

/// Everything a run needs. The text form is one `key = value` per line, with
/// the unit in the key name; lengths are in box units unless the key says
/// otherwise, and every field has a default.
struct RunConfig {
  // grid
  Index nx_cells = 128;
  Index ny_cells = 128;
  double dx_length = 1.0 / 128.0;
  Boundary boundary = Boundary::Neumann;

  // initial set; shapes are centred in the box
  Preset preset = Preset::Ball;
  double radius_box_fraction = 0.25;  ///< radius (ball, two-balls, perturbed-circle) or semi-major axis (ellipse)
  double axis_ratio_a = 2.0;          ///< ellipse a:b
  double axis_ratio_b = 1.0;
  double gap_box_fraction = 0.1;      ///< two-balls: distance between the circles
  double amplitude_relative = 0.1;    ///< perturbed-circle: r(1 + amplitude cos(k theta))
  int wavenumber = 5;
  std::string mask_path;              ///< from-file

  // time stepping
  double h_time = 64.0 / (128.0 * 128.0);
  double t_end_time = 0.04;
  int snapshot_early_steps = 10;
  double snapshot_growth_factor = 1.5;
  int containment_margin_cells = 2;

  // solver
  PerimeterKind perimeter_kind = PerimeterKind::Isotropic;
  StepMode mode = StepMode::VolumeConstrained;
  double inner_tol_length = 1e-5;
  int inner_max_iters = 100000;
  int lambda_tol_cells = 0;
  double lambda_bracket_scale = 1.0;

  // study: time steps of the ladder, coarsest first
  std::vector<double> ladder_h_time;

  // outputs
  std::string output_dir = "out";
  bool write_pgm = false;
  std::uint64_t seed = 0;
  bool override_resolution_guard = false;

  /// Throws ConfigError on any invalid field, including sqrt(h) < 3 dx
  /// (for h_time and every ladder entry) unless the guard is overridden.
  void validate() const;

  GridDomain domain() const;
  FlowConfig flow_config(double h) const;
  FlowConfig flow_config() const { return flow_config(h_time); }
};

/// Parses the text form; unknown or repeated keys and malformed values are
/// ConfigErrors. Keys left out keep their defaults.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Text form with every field, in a fixed order, doubles in shortest
/// round-trip notation: parse_run_config(serialize(c)) == c.
std::string serialize(const RunConfig& c);

bool operator==(const RunConfig& a, const RunConfig& b);

/// sqrt(h) >= 3 dx.
bool resolution_ok(double h, double dx);

const char* preset_name(Preset p);
const char* kind_name(PerimeterKind k);
const char* mode_name(StepMode m);
const char* boundary_name(Boundary b);

/// Initial set of the configured preset (loads mask_path for from-file).
BinarySet make_initial_set(const RunConfig& c);

}  // namespace flatflow
