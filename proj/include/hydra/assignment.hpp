#pragma once

#include <utility>
#include <vector>

#include "hydra/geometry.hpp"

namespace hydra::assignment {

/// One-to-one matching result between a pseudo-ground-truth set and a
/// prediction set. Every index appears exactly once across pairs and the
/// unmatched lists of its side.
struct MatchSet {
    std::vector<std::pair<int, int>> pairs;  // (gt index, pred index)
    std::vector<int> unmatched_gt;
    std::vector<int> unmatched_pred;
};

/// Optimal assignment on a dense (possibly rectangular) cost matrix.
/// Returns min(rows, cols) pairs sorted by row. Ties between equal-cost
/// optima resolve deterministically (rows inserted in ascending order,
/// earliest minimal column preferred), so reruns are byte-identical.
/// An empty matrix yields an empty assignment.
std::vector<std::pair<int, int>> hungarian(const std::vector<std::vector<double>>& cost,
                                           bool maximize);

/// Hungarian on the IoU matrix (maximized). Pairs below `min_iou` are
/// demoted to unmatched; a class_id mismatch forces the pair's IoU to 0.
/// Both sets must carry the same frame tag.
MatchSet match_by_iou(const geometry::DetectionSet& gt, const geometry::DetectionSet& pred,
                      double min_iou,
                      geometry::IouMode mode = geometry::IouMode::BevTimesHeight);

}  // namespace hydra::assignment
