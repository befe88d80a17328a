// flatflow: run, study and oracle-test front end.
//
// Exit codes: 0 success, 1 oracle mismatch, 2 config error, 3 I/O error,
// 4 solver error. Errors are printed to stdout as one JSON line.

#include "flatflow/error.hpp"
#include "flatflow/flow.hpp"
#include "flatflow/oracle.hpp"
#include "flatflow/output.hpp"
#include "flatflow/run_config.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

namespace ff = flatflow;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool override_guard = false;
};

ff::RunConfig resolve(const CommonFlags& f) {
  ff::RunConfig c = f.config.empty() ? ff::RunConfig{} : ff::load_run_config(f.config);
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.override_guard) c.override_resolution_guard = true;
  c.validate();
  return c;
}

void progress(const ff::StepRecord& r) {
  std::fprintf(stderr, "step %d t=%.6g volume=%lld P=%.6g lambda=%.6g flips=%d\n", r.k, r.time,
               static_cast<long long>(r.volume_cells), r.perimeter_after, r.lambda, r.flipped_cells);
}

int cmd_run(const CommonFlags& flags, bool quiet) {
  const ff::RunConfig c = resolve(flags);
  const ff::BinarySet e0 = ff::make_initial_set(c);
  const ff::FlowTrajectory tr = ff::run(e0, c.flow_config(), quiet ? ff::FlowObserver{} : progress);
  for (const std::string& w : tr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  ff::write_run_outputs(c, tr, c.output_dir);
  std::printf("%s\n", (std::filesystem::path(c.output_dir) / "summary.json").string().c_str());
  return 0;
}

int cmd_study(const CommonFlags& flags, const std::vector<double>& ladder, bool quiet) {
  ff::RunConfig c = flags.config.empty() ? ff::RunConfig{} : ff::load_run_config(flags.config);
  if (!ladder.empty()) c.ladder_h_time = ladder;
  ff::RunConfig resolved = c;
  if (!flags.out.empty()) resolved.output_dir = flags.out;
  if (flags.seed) resolved.seed = *flags.seed;
  if (flags.override_guard) resolved.override_resolution_guard = true;
  resolved.validate();
  if (resolved.ladder_h_time.size() < 2) {
    throw ff::ConfigError("config: study needs at least two ladder_h_time values");
  }
  const ff::BinarySet e0 = ff::make_initial_set(resolved);
  const std::filesystem::path root = resolved.output_dir;
  std::vector<ff::FlowTrajectory> runs;
  for (std::size_t i = 0; i < resolved.ladder_h_time.size(); ++i) {
    ff::RunConfig one = resolved;
    one.h_time = resolved.ladder_h_time[i];
    one.output_dir = (root / ("h_" + std::to_string(i))).string();
    if (!quiet) std::fprintf(stderr, "ladder entry %zu: h = %g\n", i, one.h_time);
    runs.push_back(ff::run(e0, one.flow_config(), quiet ? ff::FlowObserver{} : progress));
    ff::write_run_outputs(one, runs.back(), one.output_dir);
  }
  std::filesystem::create_directories(root);
  ff::write_text(root / "study.csv", ff::study_csv(runs));
  std::printf("%s\n", (root / "study.csv").string().c_str());
  return 0;
}

int cmd_oracle(std::uint64_t seed, int count, double inner_tol) {
  if (count < 0) throw ff::ConfigError("config: --count must be non-negative");
  std::mt19937_64 rng(seed);
  int energy_fail = 0;
  int mask_fail = 0;
  int masks_checked = 0;
  for (int i = 0; i < count; ++i) {
    const ff::OracleCase oc = ff::random_oracle_case(rng, i % 2 == 0 ? 4 : 5);
    const ff::OracleComparison r = ff::compare_with_oracle(oc, inner_tol);
    energy_fail += r.energy_ok ? 0 : 1;
    masks_checked += r.mask_checked ? 1 : 0;
    mask_fail += r.mask_ok ? 0 : 1;
    std::printf("instance %d grid=%lldx%lld h=%.17g solver=%.17g oracle=%.17g tol=%.3g ties=%d flips=%d mask=%s %s\n", i,
                static_cast<long long>(oc.f.domain().nx()), static_cast<long long>(oc.f.domain().ny()), oc.h,
                r.solver_energy, r.oracle_energy, r.tolerance, r.ties, r.flipped_cells,
                r.mask_checked ? (r.mask_ok ? "same" : "differs") : "unchecked",
                r.energy_ok && r.mask_ok ? "PASS" : "FAIL");
  }
  nlohmann::ordered_json s;
  s["instances"] = count;
  s["seed"] = seed;
  s["energy_failures"] = energy_fail;
  s["masks_checked"] = masks_checked;
  s["mask_failures"] = mask_fail;
  s["pass"] = energy_fail == 0 && mask_fail == 0;
  std::printf("%s\n", s.dump().c_str());
  return energy_fail == 0 && mask_fail == 0 ? 0 : 1;
}

int report(const char* kind, int code, const std::string& what) {
  std::printf("%s\n", ff::error_json(kind, code, what).c_str());
  std::fprintf(stderr, "error: %s\n", what.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume-preserving mean curvature flow by minimizing movements on a grid"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run one flow and write steps.csv, summary.json and masks/");
  run->add_option("--config", run_flags.config, "key = value config file (defaults when omitted)");
  run->add_option("--out", run_flags.out, "output directory (overrides output_dir)");
  run->add_option("--seed", run_flags.seed, "random seed (overrides seed)");
  run->add_flag("--override-resolution-guard", run_flags.override_guard, "allow sqrt(h) < 3 dx");
  run->add_flag("--quiet", quiet, "no per-step progress on stderr");

  CommonFlags study_flags;
  std::vector<double> ladder;
  auto* study = app.add_subcommand("study", "Run an h-ladder and write study.csv");
  study->add_option("--config", study_flags.config, "key = value config file");
  study->add_option("--out", study_flags.out, "output directory");
  study->add_option("--seed", study_flags.seed, "random seed");
  study->add_option("--ladder", ladder, "time steps, coarsest first (overrides ladder_h_time)")->delimiter(',');
  study->add_flag("--override-resolution-guard", study_flags.override_guard, "allow sqrt(h) < 3 dx");
  study->add_flag("--quiet", quiet, "no per-step progress on stderr");

  std::uint64_t seed = 0;
  int count = 200;
  double tol = 1e-5;
  auto* oracle = app.add_subcommand("oracle-test", "Compare mm_step with exhaustive enumeration on small grids");
  oracle->add_option("--seed", seed, "random seed");
  oracle->add_option("--count", count, "number of instances");
  oracle->add_option("--inner-tol", tol, "inner solver gap tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("config", 2, e.what());
  }

  try {
    if (*run) return cmd_run(run_flags, quiet);
    if (*study) return cmd_study(study_flags, ladder, quiet);
    if (*oracle) return cmd_oracle(seed, count, tol);
  } catch (const ff::ConfigError& e) {
    return report("config", 2, e.what());
  } catch (const ff::IoError& e) {
    return report("io", 3, e.what());
  } catch (const ff::SolverError& e) {
    return report("solver", 4, e.what());
  } catch (const ff::DomainError& e) {
    return report("config", 2, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report("io", 3, e.what());
  }
  return 0;
}
