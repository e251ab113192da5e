// Test-only reference implementations. Each oracle is written
// independently of the library path it checks: brute-force enumeration
// for the assignment optimum, homogeneous 3x3 matrices for SE(2),
// point-sampling Monte Carlo for rotated IoU, and direct prefix-sum
// scripts for Soft-AP and detection AP.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hydra/domain.hpp"
#include "hydra/geometry.hpp"
#include "hydra/rng.hpp"

namespace oracles {

using hydra::geometry::Detection;
using hydra::geometry::DetectionSet;
using hydra::geometry::Pose2;

// ---------------------------------------------------------------------
// Homogeneous-matrix SE(2) oracle
// ---------------------------------------------------------------------

struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};
};

inline Mat3 pose_to_mat(const Pose2& p) {
    const double c = std::cos(p.yaw);
    const double s = std::sin(p.yaw);
    Mat3 out;
    out.m = {{{c, -s, p.x}, {s, c, p.y}, {0.0, 0.0, 1.0}}};
    return out;
}

inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double sum = 0.0;
            for (int k = 0; k < 3; ++k) sum += a.m[i][k] * b.m[k][j];
            out.m[i][j] = sum;
        }
    }
    return out;
}

// Rigid inverse: transpose the rotation block, negate-rotate the translation.
inline Mat3 mat_inv(const Mat3& a) {
    Mat3 out;
    out.m[0][0] = a.m[0][0];
    out.m[0][1] = a.m[1][0];
    out.m[1][0] = a.m[0][1];
    out.m[1][1] = a.m[1][1];
    out.m[0][2] = -(out.m[0][0] * a.m[0][2] + out.m[0][1] * a.m[1][2]);
    out.m[1][2] = -(out.m[1][0] * a.m[0][2] + out.m[1][1] * a.m[1][2]);
    out.m[2] = {0.0, 0.0, 1.0};
    return out;
}

inline Pose2 mat_to_pose(const Mat3& a) {
    return Pose2(a.m[0][2], a.m[1][2], std::atan2(a.m[1][0], a.m[0][0]));
}

inline Pose2 compose_ref(const Pose2& a, const Pose2& b) {
    return mat_to_pose(mat_mul(pose_to_mat(a), pose_to_mat(b)));
}

inline Pose2 inverse_ref(const Pose2& p) { return mat_to_pose(mat_inv(pose_to_mat(p))); }

inline void apply_point_ref(const Pose2& p, double x, double y, double& ox, double& oy) {
    const Mat3 m = pose_to_mat(p);
    ox = m.m[0][0] * x + m.m[0][1] * y + m.m[0][2];
    oy = m.m[1][0] * x + m.m[1][1] * y + m.m[1][2];
}

// ---------------------------------------------------------------------
// Brute-force assignment optimum (n, m <= ~8)
// ---------------------------------------------------------------------

inline void assignment_search(const std::vector<std::vector<double>>& cost, std::size_t row,
                              std::uint32_t used, double acc, bool maximize, double& best) {
    const std::size_t rows = cost.size();
    if (row == rows) {
        best = maximize ? std::max(best, acc) : std::min(best, acc);
        return;
    }
    for (std::size_t col = 0; col < cost[row].size(); ++col) {
        if (used & (1u << col)) continue;
        assignment_search(cost, row + 1, used | (1u << col), acc + cost[row][col], maximize,
                          best);
    }
}

/// Exhaustive optimal total over all complete assignments of
/// min(rows, cols) pairs.
inline double brute_force_assignment_total(std::vector<std::vector<double>> cost, bool maximize) {
    if (cost.empty() || cost[0].empty()) return 0.0;
    if (cost.size() > cost[0].size()) {  // transpose so rows <= cols
        std::vector<std::vector<double>> t(cost[0].size(), std::vector<double>(cost.size()));
        for (std::size_t i = 0; i < cost.size(); ++i) {
            for (std::size_t j = 0; j < cost[0].size(); ++j) t[j][i] = cost[i][j];
        }
        cost = std::move(t);
    }
    double best = maximize ? -1e300 : 1e300;
    assignment_search(cost, 0, 0, 0.0, maximize, best);
    return best;
}

// ---------------------------------------------------------------------
// Monte Carlo rotated-IoU oracle
// ---------------------------------------------------------------------

inline bool point_in_box(const Detection& b, double px, double py, double pz) {
    const double c = std::cos(b.yaw);
    const double s = std::sin(b.yaw);
    const double dx = px - b.x;
    const double dy = py - b.y;
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    return std::abs(lx) <= 0.5 * b.length && std::abs(ly) <= 0.5 * b.width &&
           std::abs(pz - b.z) <= 0.5 * b.height;
}

/// Samples points uniformly inside box a and estimates
/// vol(a I b) = vol(a) * hit fraction, then IoU.
inline double mc_iou(const Detection& a, const Detection& b, int n_samples, std::uint64_t seed) {
    hydra::rng::Stream s(seed);
    const double ca = std::cos(a.yaw);
    const double sa = std::sin(a.yaw);
    long hits = 0;
    for (int i = 0; i < n_samples; ++i) {
        const double lx = s.uniform(-0.5 * a.length, 0.5 * a.length);
        const double ly = s.uniform(-0.5 * a.width, 0.5 * a.width);
        const double lz = s.uniform(-0.5 * a.height, 0.5 * a.height);
        const double px = a.x + ca * lx - sa * ly;
        const double py = a.y + sa * lx + ca * ly;
        if (point_in_box(b, px, py, a.z + lz)) ++hits;
    }
    const double vol_a = a.length * a.width * a.height;
    const double vol_b = b.length * b.width * b.height;
    const double inter = vol_a * static_cast<double>(hits) / n_samples;
    const double uni = vol_a + vol_b - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

// ---------------------------------------------------------------------
// Soft-AP prefix-sum reference
// ---------------------------------------------------------------------

inline double soft_ap_reference(std::vector<hydra::domain::QualityScoredPrediction> xs,
                                int n_gt) {
    if (n_gt <= 0 || xs.empty()) return 0.0;
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (xs[a].confidence != xs[b].confidence) return xs[a].confidence > xs[b].confidence;
        return xs[a].pred_index < xs[b].pred_index;
    });
    long double cum = 0.0L;
    long double prev_r = 0.0L;
    long double area = 0.0L;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        cum += xs[order[rank]].quality;
        const long double p = cum / static_cast<long double>(rank + 1);
        const long double r = cum / static_cast<long double>(n_gt);
        area += (r - prev_r) * p;
        prev_r = r;
    }
    if (area < 0.0L) area = 0.0L;
    if (area > 1.0L) area = 1.0L;
    return static_cast<double>(area);
}

// ---------------------------------------------------------------------
// Detection-AP reference (single class, frames given explicitly)
// ---------------------------------------------------------------------

struct RefPred {
    Detection box;
    int frame;
    int index;
};

/// Independent AP script: same protocol as the evaluator (confidence
/// order, greedy highest-IoU >= threshold, running-curve integral),
/// written as a direct loop for cross-checking.
inline double ap_reference(std::vector<RefPred> preds,
                           const std::vector<std::vector<Detection>>& gt_frames,
                           double iou_thresh) {
    long n_gt = 0;
    for (const auto& f : gt_frames) n_gt += static_cast<long>(f.size());
    if (n_gt == 0) return preds.empty() ? 1.0 : 0.0;
    if (preds.empty()) return 0.0;
    std::sort(preds.begin(), preds.end(), [](const RefPred& a, const RefPred& b) {
        if (a.box.confidence != b.box.confidence) return a.box.confidence > b.box.confidence;
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.index < b.index;
    });
    std::vector<std::vector<bool>> used;
    for (const auto& f : gt_frames) used.emplace_back(f.size(), false);

    double area = 0.0;
    double prev_r = 0.0;
    long tp = 0;
    for (std::size_t m = 0; m < preds.size(); ++m) {
        const auto& gts = gt_frames[static_cast<std::size_t>(preds[m].frame)];
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[static_cast<std::size_t>(preds[m].frame)][g]) continue;
            const double iou = hydra::geometry::iou_3d(preds[m].box, gts[g]);
            if (iou >= iou_thresh && iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(preds[m].frame)][static_cast<std::size_t>(best)] = true;
            ++tp;
        }
        const double p = static_cast<double>(tp) / static_cast<double>(m + 1);
        const double r = static_cast<double>(tp) / static_cast<double>(n_gt);
        area += (r - prev_r) * p;
        prev_r = r;
    }
    return area;
}

// ---------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------

inline Detection make_box(double x, double y, double z, double length, double width,
                          double height, double yaw, int class_id = 0,
                          double confidence = 1.0) {
    Detection d;
    d.x = x;
    d.y = y;
    d.z = z;
    d.length = length;
    d.width = width;
    d.height = height;
    d.yaw = hydra::geometry::wrap_angle(yaw);
    d.class_id = class_id;
    d.confidence = confidence;
    return d;
}

inline Pose2 random_pose(hydra::rng::Stream& s, double span = 20.0) {
    return Pose2(s.uniform(-span, span), s.uniform(-span, span),
                 s.uniform(-hydra::geometry::kPi, hydra::geometry::kPi));
}

inline Detection random_box(hydra::rng::Stream& s, double span = 5.0) {
    return make_box(s.uniform(-span, span), s.uniform(-span, span), s.uniform(-1.0, 1.0),
                    s.uniform(0.5, 5.0), s.uniform(0.5, 3.0), s.uniform(0.5, 3.0),
                    s.uniform(-hydra::geometry::kPi, hydra::geometry::kPi),
                    static_cast<int>(s.next_u64() % 3), s.uniform(0.0, 1.0));
}

}  // namespace oracles
