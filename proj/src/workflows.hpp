#pragma once

#include <string>

namespace rblab {

// JSON-driven entry points behind the CLI subcommands.  Each parses its
// config strictly (unknown keys are SchemaErrors with field paths), runs the
// workflow, and writes its artifacts plus a fully-resolved config echo into
// out_dir (which must already exist; atomicity is the caller's concern).
void run_simulate_noise(const std::string& config_json, const std::string& out_dir);
void run_solve(const std::string& config_json, const std::string& out_dir);
void run_estimate(const std::string& config_json, const std::string& out_dir);
void run_calibrate_d(const std::string& config_json, const std::string& out_dir);
void run_experiment_cmd(const std::string& config_json, const std::string& out_dir);

} // namespace rblab
