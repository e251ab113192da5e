#include "hydra/fusion.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace hydra::fusion {

using geometry::Detection;
using geometry::DetectionSet;
using geometry::Pose2;

geometry::DetectionSet pool_to_global(
    const geometry::DetectionSet& stage1,
    const std::vector<std::pair<Pose2, DetectionSet>>& late_agents) {
    if (stage1.frame != geometry::Frame::EgoGlobal) {
        throw std::logic_error("pool_to_global: stage-1 set must be ego-global");
    }
    DetectionSet out = stage1;
    for (const auto& [pose, dets] : late_agents) {
        if (dets.frame != geometry::Frame::AgentLocal) {
            throw std::logic_error("pool_to_global: agent sets must be agent-local");
        }
        for (const Detection& d : dets.items) {
            out.items.push_back(geometry::transform_detection(pose, d));
        }
    }
    return out;
}

geometry::DetectionSet nms(const geometry::DetectionSet& pool, const FusionConfig& cfg) {
    if (pool.frame != geometry::Frame::EgoGlobal) {
        throw std::logic_error("nms: pooled set must be ego-global");
    }
    std::vector<int> order;
    order.reserve(pool.items.size());
    for (int i = 0; i < static_cast<int>(pool.items.size()); ++i) {
        if (pool.items[i].confidence >= cfg.score_floor) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return pool.items[a].confidence > pool.items[b].confidence;
    });

    DetectionSet out;
    out.frame = geometry::Frame::EgoGlobal;
    std::vector<char> suppressed(pool.items.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int a = order[i];
        if (suppressed[a]) continue;
        out.items.push_back(pool.items[a]);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const int b = order[j];
            if (suppressed[b]) continue;
            if (cfg.per_class && pool.items[a].class_id != pool.items[b].class_id) continue;
            if (geometry::iou_3d(pool.items[a], pool.items[b]) >= cfg.nms_iou) suppressed[b] = 1;
        }
    }
    return out;
}

PipelineResult hydra_pipeline(const AgentFrame& ego, const std::vector<AgentFrame>& aux,
                              const Stage1Provider& stage1_provider,
                              const domain::ClassifierConfig& classifier_cfg,
                              const pgo::PgoConfig& pgo_cfg, const FusionConfig& fusion_cfg,
                              const PipelineOptions& options) {
    PipelineResult res;

    for (const AgentFrame& a : aux) {
        res.verdicts.push_back(
            domain::classify_agent(a.agent_id, a.detections, a.ego_decode, classifier_cfg));
    }
    if (options.classifier_enabled) {
        auto [int_ids, late_ids] = domain::partition(res.verdicts);
        res.intermediate_ids = std::move(int_ids);
        res.late_ids = std::move(late_ids);
    } else {
        for (const AgentFrame& a : aux) {
            res.intermediate_ids.push_back(a.agent_id);
            res.late_ids.push_back(a.agent_id);
        }
    }

    res.stage1 = stage1_provider(res.intermediate_ids);
    if (res.stage1.frame != geometry::Frame::EgoGlobal) {
        throw std::logic_error("hydra_pipeline: stage-1 provider must return an ego-global set");
    }
    for (Detection& d : res.stage1.items) d.source = geometry::kSourceStage1;

    std::vector<pgo::LateAgent> late;
    for (const std::string& id : res.late_ids) {
        const auto it = std::find_if(aux.begin(), aux.end(),
                                     [&](const AgentFrame& a) { return a.agent_id == id; });
        late.push_back({id, it->reported_pose, it->detections});
    }

    DetectionSet stage1_for_pool = res.stage1;
    if (options.pgo_enabled && !late.empty()) {
        if (options.all_variable_pgo) {
            pgo::AllVariableResult av =
                pgo::run_all_variable(res.stage1, ego.reported_pose, late, pgo_cfg);
            res.pgo_result = std::move(av.agents);
            // Joint optimization moves the object nodes; the pooled
            // stage-1 boxes follow them.
            for (std::size_t k = 0; k < stage1_for_pool.items.size(); ++k) {
                stage1_for_pool.items[k].x = av.anchors[k].pose.x;
                stage1_for_pool.items[k].y = av.anchors[k].pose.y;
                stage1_for_pool.items[k].yaw = av.anchors[k].pose.yaw;
            }
        } else {
            res.pgo_result = pgo::run_agpgo(res.stage1, late, pgo_cfg);
        }
    } else {
        for (const pgo::LateAgent& a : late) {
            res.pgo_result.corrected[a.agent_id] = a.pose_estimate;
            res.pgo_result.edges_per_agent[a.agent_id] = 0;
        }
    }

    std::vector<std::pair<Pose2, DetectionSet>> pooled_agents;
    pooled_agents.reserve(late.size());
    for (const pgo::LateAgent& a : late) {
        pooled_agents.emplace_back(res.pgo_result.corrected.at(a.agent_id), a.detections);
    }
    res.b_final = nms(pool_to_global(stage1_for_pool, pooled_agents), fusion_cfg);
    return res;
}

}  // namespace hydra::fusion
