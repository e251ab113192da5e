#include "hydra/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hydra::eval {

using geometry::Detection;
using geometry::DetectionSet;

const char* class_name(int class_id) {
    switch (class_id) {
        case 0: return "vehicle";
        case 1: return "pedestrian";
        case 2: return "truck";
        default: return "unknown";
    }
}

namespace {

struct RankedPred {
    const Detection* box;
    int frame;
    int index;
    double confidence;
};

struct CurveResult {
    double ap = 0.0;
    long tp = 0;
    long fp = 0;
    long n_gt = 0;
};

// Greedy confidence-ordered matching against per-frame ground truth,
// then the running-curve integral sum((R_m - R_{m-1}) * P_m).
CurveResult ap_curve(std::vector<RankedPred> preds,
                     const std::vector<std::vector<const Detection*>>& gt_frames,
                     double iou_thresh) {
    CurveResult out;
    for (const auto& frame : gt_frames) out.n_gt += static_cast<long>(frame.size());
    if (out.n_gt == 0) {
        out.fp = static_cast<long>(preds.size());
        out.ap = preds.empty() ? 1.0 : 0.0;
        return out;
    }
    if (preds.empty()) return out;

    std::sort(preds.begin(), preds.end(), [](const RankedPred& a, const RankedPred& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.index < b.index;
    });

    std::vector<std::vector<char>> used(gt_frames.size());
    for (std::size_t f = 0; f < gt_frames.size(); ++f) used[f].assign(gt_frames[f].size(), 0);

    long tp = 0;
    double prev_recall = 0.0;
    double area = 0.0;
    for (std::size_t m = 0; m < preds.size(); ++m) {
        const RankedPred& p = preds[m];
        int best_gt = -1;
        double best_iou = 0.0;
        const auto& gts = gt_frames[static_cast<std::size_t>(p.frame)];
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[static_cast<std::size_t>(p.frame)][g]) continue;
            const double iou = geometry::iou_3d(*p.box, *gts[g]);
            if (iou >= iou_thresh && iou > best_iou) {
                best_iou = iou;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            used[static_cast<std::size_t>(p.frame)][static_cast<std::size_t>(best_gt)] = 1;
            ++tp;
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(m + 1);
        const double recall = static_cast<double>(tp) / static_cast<double>(out.n_gt);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    out.tp = tp;
    out.fp = static_cast<long>(preds.size()) - tp;
    out.ap = std::clamp(area, 0.0, 1.0);
    return out;
}

}  // namespace

double average_precision(const geometry::DetectionSet& pred,
                         const std::vector<Detection>& truth, double iou_thresh) {
    std::vector<RankedPred> ranked;
    ranked.reserve(pred.items.size());
    for (int i = 0; i < static_cast<int>(pred.items.size()); ++i) {
        ranked.push_back({&pred.items[i], 0, i, pred.items[i].confidence});
    }
    std::vector<std::vector<const Detection*>> gt(1);
    gt[0].reserve(truth.size());
    for (const Detection& t : truth) gt[0].push_back(&t);
    return ap_curve(std::move(ranked), gt, iou_thresh).ap;
}

void ApAccumulator::add_frame(const geometry::DetectionSet& preds,
                              const std::vector<Detection>& truth) {
    if (preds.frame != geometry::Frame::EgoGlobal) {
        throw std::logic_error("ApAccumulator: predictions must be ego-global");
    }
    const int frame = static_cast<int>(truth_frames_.size());
    truth_frames_.push_back(truth);
    for (int i = 0; i < static_cast<int>(preds.items.size()); ++i) {
        preds_.push_back({preds.items[i], frame, i});
    }
}

ApReport ApAccumulator::finalize() const {
    ApReport report;
    for (int c = 0; c < kNumClasses; ++c) {
        std::vector<std::vector<const Detection*>> gt(truth_frames_.size());
        for (std::size_t f = 0; f < truth_frames_.size(); ++f) {
            for (const Detection& t : truth_frames_[f]) {
                if (t.class_id == c) gt[f].push_back(&t);
            }
        }
        std::vector<RankedPred> ranked;
        for (const PredRecord& p : preds_) {
            if (p.box.class_id == c) ranked.push_back({&p.box, p.frame, p.index, p.box.confidence});
        }
        for (int t = 0; t < 3; ++t) {
            const CurveResult r = ap_curve(ranked, gt, kIouThresholds[static_cast<std::size_t>(t)]);
            report.ap[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] = r.ap;
            ThresholdCounts& cc =
                report.class_counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
            cc.tp = r.tp;
            cc.fp = r.fp;
            cc.fn = r.n_gt - r.tp;
            report.counts[static_cast<std::size_t>(t)].tp += r.tp;
            report.counts[static_cast<std::size_t>(t)].fp += r.fp;
            report.counts[static_cast<std::size_t>(t)].fn += r.n_gt - r.tp;
        }
    }
    for (int t = 0; t < 3; ++t) {
        double sum = 0.0;
        for (int c = 0; c < kNumClasses; ++c) {
            sum += report.ap[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
        }
        report.total[static_cast<std::size_t>(t)] = sum / kNumClasses;
    }
    return report;
}

PoseErrorStats pose_error_stats(const std::map<std::string, geometry::Pose2>& corrected,
                                const std::map<std::string, geometry::Pose2>& true_poses) {
    if (corrected.size() != true_poses.size()) {
        throw std::invalid_argument("pose_error_stats: agent id sets differ");
    }
    PoseErrorStats out;
    if (corrected.empty()) return out;
    for (const auto& [id, pose] : corrected) {
        const auto it = true_poses.find(id);
        if (it == true_poses.end()) {
            throw std::invalid_argument("pose_error_stats: agent id sets differ");
        }
        const geometry::PoseDelta d = geometry::pose_minus(pose, it->second);
        const double trans = std::hypot(d.dx, d.dy);
        const double yaw = std::abs(d.dyaw);
        out.mean_translation += trans;
        out.mean_yaw += yaw;
        out.max_translation = std::max(out.max_translation, trans);
        out.max_yaw = std::max(out.max_yaw, yaw);
    }
    out.mean_translation /= static_cast<double>(corrected.size());
    out.mean_yaw /= static_cast<double>(corrected.size());
    return out;
}

}  // namespace hydra::eval
