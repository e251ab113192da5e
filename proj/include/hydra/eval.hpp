#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "hydra/geometry.hpp"

namespace hydra::eval {

inline constexpr int kNumClasses = 3;
inline constexpr std::array<double, 3> kIouThresholds{0.3, 0.5, 0.7};

const char* class_name(int class_id);

struct ThresholdCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
};

struct ApReport {
    // ap[class][threshold], thresholds as in kIouThresholds
    std::array<std::array<double, 3>, kNumClasses> ap{};
    std::array<double, 3> total{};  // arithmetic mean over classes
    std::array<ThresholdCounts, 3> counts{};  // aggregated over classes
    std::array<std::array<ThresholdCounts, 3>, kNumClasses> class_counts{};
};

/// Single-class, single-frame average precision. Predictions sorted by
/// confidence descending are greedily matched to the unused ground truth
/// with the highest IoU >= iou_thresh; the exact (all-point) AP is
/// sum over ranks of (R_m - R_{m-1}) * P_m on the running curve.
/// Empty truth with empty predictions is defined as 1.0; truth without
/// predictions is 0.0.
double average_precision(const geometry::DetectionSet& pred,
                         const std::vector<geometry::Detection>& truth, double iou_thresh);

/// Dataset-level accumulator: detections gather across frames and the
/// curve is built once at the end, per class and threshold.
class ApAccumulator {
public:
    void add_frame(const geometry::DetectionSet& preds,
                   const std::vector<geometry::Detection>& truth);
    ApReport finalize() const;

private:
    struct PredRecord {
        geometry::Detection box;
        int frame = 0;
        int index = 0;
    };
    std::vector<PredRecord> preds_;
    std::vector<std::vector<geometry::Detection>> truth_frames_;
};

struct PoseErrorStats {
    double mean_translation = 0.0;
    double max_translation = 0.0;
    double mean_yaw = 0.0;
    double max_yaw = 0.0;
};

/// Euclidean and wrapped-yaw errors between corrected and true poses;
/// the two maps must carry the same agent ids.
PoseErrorStats pose_error_stats(const std::map<std::string, geometry::Pose2>& corrected,
                                const std::map<std::string, geometry::Pose2>& true_poses);

}  // namespace hydra::eval
