#include "hydra/domain.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "hydra/assignment.hpp"

namespace hydra::domain {

double quality_score(double c_gt, double c_pred, double iou, double sigma_temp) {
    if (sigma_temp <= 0.0) throw std::invalid_argument("quality_score: sigma_temp must be > 0");
    const double s_conf = std::exp(-std::abs(c_gt - c_pred) / sigma_temp);
    return std::sqrt(s_conf * std::max(0.0, iou));
}

double soft_ap(std::vector<QualityScoredPrediction> scored, int n_gt) {
    if (n_gt <= 0 || scored.empty()) return 0.0;
    std::sort(scored.begin(), scored.end(),
              [](const QualityScoredPrediction& a, const QualityScoredPrediction& b) {
                  if (a.confidence != b.confidence) return a.confidence > b.confidence;
                  return a.pred_index < b.pred_index;
              });
    double q_sum = 0.0;
    double prev_recall = 0.0;
    double area = 0.0;
    for (std::size_t m = 0; m < scored.size(); ++m) {
        q_sum += scored[m].quality;
        const double precision = q_sum / static_cast<double>(m + 1);
        const double recall = q_sum / static_cast<double>(n_gt);
        assert(recall >= prev_recall);  // soft recall is non-decreasing
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return std::clamp(area, 0.0, 1.0);
}

DomainVerdict classify_agent(const std::string& agent_id,
                             const geometry::DetectionSet& transmitted,
                             const geometry::DetectionSet& ego_decode,
                             const ClassifierConfig& cfg) {
    if (transmitted.frame != geometry::Frame::AgentLocal ||
        ego_decode.frame != geometry::Frame::AgentLocal) {
        throw std::invalid_argument("classify_agent: inputs must be agent-local");
    }
    const int n_gt = static_cast<int>(transmitted.items.size());

    std::vector<QualityScoredPrediction> scored;
    scored.reserve(ego_decode.items.size());
    for (int k = 0; k < static_cast<int>(ego_decode.items.size()); ++k) {
        scored.push_back({k, ego_decode.items[k].confidence, 0.0});
    }
    if (n_gt > 0 && !scored.empty()) {
        const assignment::MatchSet matches =
            assignment::match_by_iou(transmitted, ego_decode, cfg.match_min_iou, cfg.iou_mode);
        for (const auto& [i, k] : matches.pairs) {
            const double iou =
                geometry::iou_3d(transmitted.items[i], ego_decode.items[k], cfg.iou_mode);
            scored[k].quality =
                quality_score(transmitted.items[i].confidence,
                              ego_decode.items[k].confidence, iou, cfg.sigma_temp);
        }
    }

    DomainVerdict verdict;
    verdict.agent_id = agent_id;
    verdict.s_domain = soft_ap(std::move(scored), n_gt);
    verdict.branch = verdict.s_domain >= cfg.tau ? Branch::Intermediate : Branch::Late;
    return verdict;
}

std::pair<std::vector<std::string>, std::vector<std::string>> partition(
    const std::vector<DomainVerdict>& verdicts) {
    std::pair<std::vector<std::string>, std::vector<std::string>> out;
    for (const DomainVerdict& v : verdicts) {
        if (v.branch == Branch::Intermediate) {
            out.first.push_back(v.agent_id);
        } else {
            out.second.push_back(v.agent_id);
        }
    }
    return out;
}

}  // namespace hydra::domain
