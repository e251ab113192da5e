#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hydra/geometry.hpp"

namespace hydra::domain {

/// One ranked prediction: its confidence (the sort key) and the quality
/// earned by its match. Unmatched predictions carry quality 0.
struct QualityScoredPrediction {
    int pred_index = 0;
    double confidence = 0.0;
    double quality = 0.0;
};

enum class Branch { Intermediate, Late };

struct DomainVerdict {
    std::string agent_id;
    double s_domain = 0.0;
    Branch branch = Branch::Late;
};

struct ClassifierConfig {
    double sigma_temp = 0.5;    // temperature on the confidence gap
    double tau = 0.2;           // partition threshold on s_domain
    double match_min_iou = 0.01;
    geometry::IouMode iou_mode = geometry::IouMode::BevTimesHeight;
};

/// Pair quality q = sqrt(S_conf * S_iou) with
/// S_conf = exp(-|c_gt - c_pred| / sigma_temp) and S_iou the match IoU.
/// High quality needs both precise localization and a preserved
/// confidence level.
double quality_score(double c_gt, double c_pred, double iou, double sigma_temp);

/// Area under the soft precision-recall curve. Predictions are sorted by
/// confidence descending (ties by ascending pred_index); at each rank m,
/// P_m = (sum of the top-m qualities)/m and R_m = (same sum)/n_gt; the
/// returned score is sum over ranks of (R_m - R_{m-1}) * P_m, clamped to
/// [0, 1]. Zero when n_gt == 0 or the list is empty.
double soft_ap(std::vector<QualityScoredPrediction> scored, int n_gt);

/// Full per-agent classification: Hungarian-match the ego decode
/// against the transmitted pseudo-ground-truths, score each matched
/// pair, zero the unmatched
/// predictions, Soft-AP over all predictions, then threshold at tau.
/// Both sets must be agent-local; the score is pose-independent by
/// construction.
DomainVerdict classify_agent(const std::string& agent_id,
                             const geometry::DetectionSet& transmitted,
                             const geometry::DetectionSet& ego_decode,
                             const ClassifierConfig& cfg);

/// Splits verdicts into (intermediate ids, late ids), order-stable.
std::pair<std::vector<std::string>, std::vector<std::string>> partition(
    const std::vector<DomainVerdict>& verdicts);

}  // namespace hydra::domain
