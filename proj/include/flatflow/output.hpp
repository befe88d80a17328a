#pragma once

#include "flatflow/flow.hpp"
#include "flatflow/run_config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace flatflow {

/// Column names of steps.csv, in order.
const std::vector<std::string>& steps_csv_columns();

/// One row per record, doubles in shortest round-trip notation.
std::string steps_csv(const FlowTrajectory& tr);

/// Summary document: config echo (every key, defaults included), warnings,
/// tolerances with their grid-resolution allowances, and all report scalars.
std::string summary_json(const RunConfig& cfg, const FlowTrajectory& tr);

/// File name of a snapshot mask, "t_<time>.mask".
std::string snapshot_name(double time);

/// steps.csv, summary.json and masks/ (plus .pgm when configured) under dir.
void write_run_outputs(const RunConfig& cfg, const FlowTrajectory& tr, const std::filesystem::path& dir);

/// Ladder comparison; runs ordered coarsest h first. One row per snapshot
/// time of the coarsest run and per run: perimeter, symmetric difference to
/// the previous (coarser) run at the same time, and the run-level constants.
std::string study_csv(const std::vector<FlowTrajectory>& runs);

/// Machine-readable error document printed by the command line tool.
std::string error_json(const std::string& kind, int exit_code, const std::string& message);

/// Writes text to path, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace flatflow
