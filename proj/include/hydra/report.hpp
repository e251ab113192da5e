#pragma once

#include <string>

#include "hydra/runner.hpp"

namespace hydra::report {

/// report.json body: AP table, counts, score statistics, pose-graph
/// diagnostics. Deterministic key order and number formatting.
std::string to_json(const runner::RunConfig& cfg, const runner::RunResult& res);

/// report.csv body: method,class,threshold,ap rows (classes plus total).
std::string to_csv(const runner::RunConfig& cfg, const runner::RunResult& res);

/// One combined-sweep CSV row block for a single sweep point.
std::string sweep_rows(const runner::RunConfig& cfg, const runner::RunResult& res,
                       const std::string& key, const std::string& value);

inline const char* kSweepHeader = "method,sweep_key,sweep_value,class,threshold,ap\n";

/// Atomic-ish file write: content lands fully or an exception is thrown
/// before anything is left behind.
void write_file(const std::string& path, const std::string& content);

}  // namespace hydra::report
