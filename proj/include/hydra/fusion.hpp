#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hydra/domain.hpp"
#include "hydra/geometry.hpp"
#include "hydra/pgo.hpp"

namespace hydra::fusion {

struct FusionConfig {
    double nms_iou = 0.3;
    double score_floor = 0.1;
    bool per_class = true;
};

/// One agent's per-timestep payload: its transmitted detections, its
/// transmitted global pose (noisy for auxiliaries), and the ego-side
/// decode of its features (empty for the ego itself).
struct AgentFrame {
    std::string agent_id;
    geometry::Pose2 reported_pose;
    geometry::DetectionSet detections;  // agent-local
    geometry::DetectionSet ego_decode;  // agent-local
};

/// Transforms each late agent's boxes into the ego-global frame with its
/// corrected pose and concatenates them after the stage-1 set. Box
/// provenance is retained.
geometry::DetectionSet pool_to_global(
    const geometry::DetectionSet& stage1,
    const std::vector<std::pair<geometry::Pose2, geometry::DetectionSet>>& late_agents);

/// Confidence-ranked greedy non-maximum suppression: drop boxes below
/// score_floor, keep in descending confidence (ties by input order),
/// suppress later boxes of the same class with IoU >= nms_iou. Kept
/// boxes pass through unmodified. Input must be ego-global.
geometry::DetectionSet nms(const geometry::DetectionSet& pool, const FusionConfig& cfg);

struct PipelineOptions {
    bool classifier_enabled = true;  // off = blind mode: every aux feeds both branches
    bool pgo_enabled = true;
    bool all_variable_pgo = false;   // joint agents+objects ablation
};

struct PipelineResult {
    geometry::DetectionSet b_final;
    std::vector<domain::DomainVerdict> verdicts;
    std::vector<std::string> intermediate_ids;
    std::vector<std::string> late_ids;
    geometry::DetectionSet stage1;
    pgo::PgoResult pgo_result;
};

/// Produces the stage-1 detection set for a given intermediate group.
/// Supplied by the
/// simulator; the partition feeding it is computed inside the pipeline.
using Stage1Provider =
    std::function<geometry::DetectionSet(const std::vector<std::string>& intermediate_ids)>;

/// The hybrid pipeline: classify -> stage 1 -> AG-PGO -> pool -> NMS.
/// Agents scored homogeneous contribute only through the stage-1
/// provider; late-branch agents pass through pose correction and the
/// pooled NMS. With the classifier disabled every auxiliary feeds both
/// branches (blind fusion).
PipelineResult hydra_pipeline(const AgentFrame& ego, const std::vector<AgentFrame>& aux,
                              const Stage1Provider& stage1_provider,
                              const domain::ClassifierConfig& classifier_cfg,
                              const pgo::PgoConfig& pgo_cfg, const FusionConfig& fusion_cfg,
                              const PipelineOptions& options);

}  // namespace hydra::fusion
