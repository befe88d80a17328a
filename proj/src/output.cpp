#include "flatflow/output.hpp"

#include "flatflow/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace flatflow {

using Json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Lines of serialize() as an object of strings: lossless and in file order.
Json config_echo(const RunConfig& cfg) {
  Json out = Json::object();
  std::istringstream in(serialize(cfg));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

Json density_json(const DensityExtremes& e) {
  return Json{{"volume_min", e.volume_min},
              {"volume_max", e.volume_max},
              {"perimeter_min", e.perimeter_min},
              {"perimeter_max", e.perimeter_max},
              {"samples", e.samples}};
}

}  // namespace

const std::vector<std::string>& steps_csv_columns() {
  static const std::vector<std::string> cols = {
      "k", "time", "volume_cells", "perimeter_before", "perimeter_after", "lambda", "dissipation_term", "eps_fix",
      "dissipation_slack", "dissipation_ok", "inner_gap", "threshold_gap", "fixup_potential", "flipped_cells",
      "kept_previous", "descent_swaps", "lambda_evaluations", "inner_iterations", "el_residual_median", "el_residual_p90", "mean_curvature",
      "curvature_sq", "curvature_minus_lambda_sq", "velocity_sq", "sup_boundary_distance", "sup_curvature", "diameter",
      "enclosing_radius", "isoperimetric_ratio", "components", "sym_diff_initial", "density_half_volume_min",
      "density_half_volume_max", "density_half_perimeter_min", "density_half_perimeter_max", "density_full_volume_min",
      "density_full_volume_max", "density_full_perimeter_min", "density_full_perimeter_max"};
  return cols;
}

std::string steps_csv(const FlowTrajectory& tr) {
  std::string out;
  const auto& cols = steps_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out += (i ? "," : "") + cols[i];
  }
  out += '\n';
  for (const StepRecord& r : tr.records) {
    const std::vector<std::string> row = {
        std::to_string(r.k), num(r.time), std::to_string(r.volume_cells), num(r.perimeter_before),
        num(r.perimeter_after), num(r.lambda), num(r.dissipation_term), num(r.eps_fix), num(r.dissipation_slack),
        r.dissipation_ok() ? "1" : "0", num(r.inner_gap), num(r.threshold_gap), num(r.fixup_potential),
        std::to_string(r.flipped_cells), r.kept_previous ? "1" : "0", std::to_string(r.descent_swaps),
        std::to_string(r.lambda_evaluations), std::to_string(r.inner_iterations),
        num(r.el_residual_median), num(r.el_residual_p90), num(r.mean_curvature), num(r.curvature_sq),
        num(r.curvature_minus_lambda_sq), num(r.velocity_sq), num(r.sup_boundary_distance), num(r.sup_curvature),
        num(r.diameter), num(r.enclosing_radius), num(r.isoperimetric_ratio), std::to_string(r.components),
        num(r.sym_diff_initial), num(r.density_half.volume_min), num(r.density_half.volume_max),
        num(r.density_half.perimeter_min), num(r.density_half.perimeter_max), num(r.density_full.volume_min),
        num(r.density_full.volume_max), num(r.density_full.perimeter_min), num(r.density_full.perimeter_max)};
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += (i ? "," : "") + row[i];
    }
    out += '\n';
  }
  return out;
}

std::string snapshot_name(double time) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "t_%.8f.mask", time);
  return buf;
}

std::string summary_json(const RunConfig& cfg, const FlowTrajectory& tr) {
  const GridDomain d = cfg.domain();
  const TrajectorySummary s = summarize(tr);
  const double p0 = tr.records.front().perimeter_after;
  Json j;
  j["config"] = config_echo(cfg);
  j["warnings"] = tr.warnings;
  j["tolerances"] = {
      {"inner_tol_length", cfg.inner_tol_length},
      {"eps_grid_volume", p0 * d.dx()},
      {"eps_grid_perimeter_per_flip", 2.0 * GridDomain::dimension * d.face_area()},
      {"dissipation_slack_floor", 1e-12 * (1.0 + p0)},
      {"enclosing_radius_slack", std::sqrt(2.0) * d.dx()},
  };
  j["run"] = {
      {"steps", s.steps},
      {"time_end", tr.records.back().time},
      {"initial_volume_cells", s.initial_cells},
      {"final_volume_cells", tr.records.back().volume_cells},
      {"volume_conserved", s.volume_conserved},
      {"dissipation_failures", s.dissipation_failures},
      {"min_dissipation_slack", s.min_dissipation_slack},
      {"perimeter_initial", p0},
      {"perimeter_final", tr.records.back().perimeter_after},
      {"perimeter_excess", s.perimeter_excess},
      {"total_flipped_cells", s.total_flipped_cells},
      {"max_flipped_cells", s.max_flipped_cells},
      {"kept_previous_steps", s.kept_previous_steps},
      {"lambda_final", tr.records.back().lambda},
      {"max_el_residual_median", s.max_el_residual_median},
      {"max_el_scale", s.max_el_scale},
      {"max_sym_diff_initial", s.max_sym_diff_initial},
  };
  j["holder_modulus"] = s.holder_modulus;
  j["scaling"] = {
      {"max_sup_boundary_distance_over_sqrt_h", s.max_distance_scaled},
      {"max_sup_curvature_times_sqrt_h", s.max_curvature_scaled},
      {"max_abs_lambda_times_sqrt_h", s.multiplier.max_abs_lambda_sqrt_h},
  };
  j["density"] = {
      {"min_ratio", s.density_min},
      {"max_ratio", s.density_max},
      {"final_half_radius", density_json(tr.records.back().density_half)},
      {"final_full_radius", density_json(tr.records.back().density_full)},
  };
  j["multiplier"] = {
      {"max_abs_lambda_sqrt_h", s.multiplier.max_abs_lambda_sqrt_h},
      {"integral_curvature_sq_plus_lambda_sq", s.multiplier.h_sq_plus_lambda_sq},
      {"integral_curvature_minus_lambda_sq", s.multiplier.h_minus_lambda_sq},
      {"integral_velocity_sq", s.multiplier.velocity_sq},
      {"perimeter_drop", s.multiplier.perimeter_drop},
      {"dissipation_constant", s.multiplier.dissipation_constant},
  };
  if (s.steps >= 10) {
    const auto family = standard_test_family(d, tr.records.back().time);
    const WeakFormResidual w = weak_form_residual(tr, family);
    Json per = Json::object();
    for (std::size_t i = 0; i < family.size(); ++i) {
      per[family[i].name] = w.per_function[i];
    }
    j["weak_form"] = {{"residual", w.residual},
                      {"curvature_identity", w.curvature_identity},
                      {"transport_identity", w.transport_identity},
                      {"per_function", per}};
  } else {
    j["weak_form"] = nullptr;
  }
  const BallConvergenceReport b = ball_convergence_report(tr);
  Json series = Json::array();
  for (const BallSnapshot& x : b.series) {
    series.push_back({{"k", x.k},
                      {"time", x.time},
                      {"isoperimetric_ratio", x.isoperimetric_ratio},
                      {"floor_ratio", x.floor_ratio},
                      {"components", x.components},
                      {"component_ratios", x.component_ratios},
                      {"component_floors", x.component_floors}});
  }
  j["ball"] = {{"final_ratio", b.final_ratio},
               {"final_floor", b.final_floor},
               {"final_ratio_over_floor", b.final_floor > 0.0 ? b.final_ratio / b.final_floor : 0.0},
               {"final_components", b.final_components},
               {"series", series}};
  j["containment"] = {{"enclosing_radius_initial", tr.records.front().enclosing_radius},
                      {"enclosing_radius_excess", s.enclosing_excess},
                      {"diameter_initial", tr.records.front().diameter},
                      {"diameter_max", s.max_diameter}};
  if (cfg.mode == StepMode::Unconstrained) {
    const double rmin = 10.0 * d.dx();
    const CircleTrackingReport c = circle_tracking_report(tr, rmin);
    j["circle_tracking"] = {{"r0", c.r0},
                            {"r_min", rmin},
                            {"max_relative_error", c.max_relative_error},
                            {"steps_compared", c.steps_compared}};
  }
  Json snaps = Json::array();
  for (const Snapshot& x : tr.snapshots) {
    snaps.push_back({{"k", x.k}, {"time", x.time}, {"file", "masks/" + snapshot_name(x.time)}});
  }
  j["snapshots"] = snaps;
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

void write_run_outputs(const RunConfig& cfg, const FlowTrajectory& tr, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "masks", ec);
  if (ec) {
    throw IoError("cannot create " + (dir / "masks").string() + ": " + ec.message());
  }
  write_text(dir / "steps.csv", steps_csv(tr));
  write_text(dir / "summary.json", summary_json(cfg, tr));
  for (const Snapshot& s : tr.snapshots) {
    const std::filesystem::path p = dir / "masks" / snapshot_name(s.time);
    save_mask(s.set, p);
    if (cfg.write_pgm) {
      std::filesystem::path q = p;
      save_pgm(s.set, q.replace_extension(".pgm"));
    }
  }
}

std::string study_csv(const std::vector<FlowTrajectory>& runs) {
  std::string out =
      "h_time,k,time,perimeter,sym_diff_to_coarser,holder_modulus,max_abs_lambda_sqrt_h,weak_form_residual,"
      "max_sup_boundary_distance_over_sqrt_h,max_sup_curvature_times_sqrt_h,final_isoperimetric_ratio\n";
  if (runs.empty()) {
    return out;
  }
  struct RunLevel {
    TrajectorySummary s;
    double weak = 0.0;
  };
  std::vector<RunLevel> level;
  for (const FlowTrajectory& tr : runs) {
    RunLevel l;
    l.s = summarize(tr);
    if (l.s.steps >= 1) {
      const auto family = standard_test_family(tr.states.front().domain(), tr.records.back().time);
      l.weak = weak_form_residual(tr, family).residual;
    }
    level.push_back(l);
  }
  // state of a run at time t, if t is on its time grid
  auto at_time = [](const FlowTrajectory& tr, double t) -> const BinarySet* {
    const double h = tr.config.step.h;
    const auto k = static_cast<std::size_t>(std::llround(t / h));
    if (k >= tr.states.size() || std::abs(static_cast<double>(k) * h - t) > 1e-9 * h) {
      return nullptr;
    }
    return &tr.states[k];
  };
  for (const Snapshot& snap : runs.front().snapshots) {
    for (std::size_t j = 0; j < runs.size(); ++j) {
      const FlowTrajectory& tr = runs[j];
      const BinarySet* s = at_time(tr, snap.time);
      if (s == nullptr) {
        continue;
      }
      const auto k = std::llround(snap.time / tr.config.step.h);
      std::string diff;
      if (j > 0) {
        if (const BinarySet* prev = at_time(runs[j - 1], snap.time)) {
          diff = num(sym_diff_volume(*s, *prev));
        }
      }
      const RunLevel& l = level[j];
      out += num(tr.config.step.h) + "," + std::to_string(k) + "," + num(snap.time) + "," +
             num(tr.records[static_cast<std::size_t>(k)].perimeter_after) + "," + diff + "," + num(l.s.holder_modulus) +
             "," + num(l.s.multiplier.max_abs_lambda_sqrt_h) + "," + num(l.weak) + "," + num(l.s.max_distance_scaled) +
             "," + num(l.s.max_curvature_scaled) + "," + num(tr.records.back().isoperimetric_ratio) + "\n";
    }
  }
  return out;
}

std::string error_json(const std::string& kind, int exit_code, const std::string& message) {
  Json j;
  j["error"] = kind;
  j["exit_code"] = exit_code;
  j["message"] = message;
  return j.dump();
}

}  // namespace flatflow
