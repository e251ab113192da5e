#pragma once

#include <map>
#include <string>
#include <vector>

#include "hydra/config.hpp"
#include "hydra/domain.hpp"
#include "hydra/eval.hpp"
#include "hydra/fusion.hpp"
#include "hydra/pgo.hpp"
#include "hydra/sim.hpp"

namespace hydra::runner {

enum class Method {
    NoFusion,
    LateOnly,
    IntermediateOnly,
    Hydra,
    HydraNoClassifier,
    HydraNoPgo,
    HydraAllVariablePgo,
};

Method parse_method(const std::string& name);
const char* method_name(Method m);

struct RunConfig {
    sim::ScenarioConfig scenario;
    domain::ClassifierConfig classifier;
    pgo::PgoConfig pgo;
    fusion::FusionConfig fusion;
    Method method = Method::Hydra;
    int jobs = 1;
};

/// Defaults for every non-agent key, as strings (the config tree is
/// string-valued until typed extraction).
config::Tree default_tree();

/// Typed extraction + validation of the merged tree. Throws ConfigError
/// with source locations on any bad value, missing ego, or unknown key.
RunConfig build_run_config(const config::Tree& tree);

struct ScoreStats {
    int count = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct RunResult {
    eval::ApReport report;
    int frames = 0;
    bool pgo_enabled = false;
    // s_domain statistics keyed by agent kind name
    std::map<std::string, ScoreStats> scores_by_kind;
    // verdicts per frame, aux agents in scenario order
    std::vector<std::vector<domain::DomainVerdict>> frame_verdicts;
    // late-branch pose errors, averaged over frames with late agents
    double mean_pose_error_before = 0.0;
    double mean_pose_error_after = 0.0;
    double mean_pgo_iterations = 0.0;
};

/// Executes every frame of the scenario through the selected method and
/// aggregates dataset-level AP plus diagnostics. Pure in (cfg); frames
/// may run on `jobs` worker threads with a deterministic ordered merge.
RunResult run_method(const RunConfig& cfg);

}  // namespace hydra::runner
