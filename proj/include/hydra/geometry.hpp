#pragma once

#include <cstdint>
#include <vector>

namespace hydra::geometry {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// SE(2) pose. The yaw is kept wrapped to (-pi, pi] by construction and
/// by every operation below; a single convention avoids residual sign
/// bugs in the pose-graph solver.
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    Pose2() = default;
    Pose2(double x_, double y_, double yaw_);

    static Pose2 identity() { return {}; }
};

struct PoseDelta {
    double dx = 0.0;
    double dy = 0.0;
    double dyaw = 0.0;
};

/// SE(2) composition a (+) b: rotate b's translation by a.yaw, add a's
/// translation, sum yaws.
Pose2 compose(const Pose2& a, const Pose2& b);

/// Group inverse: compose(p, inverse(p)) == identity.
Pose2 inverse(const Pose2& p);

/// Component-wise difference a - b with the yaw difference wrapped.
PoseDelta pose_minus(const Pose2& a, const Pose2& b);

// Detection provenance tags (box-level bookkeeping, not geometry).
inline constexpr int kSourceNone = -1;
inline constexpr int kSourceStage1 = -2;

/// Oriented 3D bounding box plus detection metadata. `length` runs along
/// the box's local x axis (heading), `width` along y, `height` along z.
struct Detection {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double length = 0.0;
    double width = 0.0;
    double height = 0.0;
    double yaw = 0.0;
    int class_id = 0;
    double confidence = 0.0;
    int source = kSourceNone;  // producing agent index, kSourceStage1, or none
};

enum class Frame { AgentLocal, EgoGlobal };

/// Ordered detection list; all members share the set's coordinate frame.
struct DetectionSet {
    std::vector<Detection> items;
    Frame frame = Frame::AgentLocal;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

/// Applies `pose` to the box: rotates/translates the (x, y) center,
/// adds pose.yaw to the box yaw (wrapped). z, size, class, confidence
/// and provenance are unchanged.
Detection transform_detection(const Pose2& pose, const Detection& d);

/// Transforms every box of `set` by `pose` and retags the result.
DetectionSet transform_set(const Pose2& pose, const DetectionSet& set, Frame new_frame);

enum class IouMode {
    Bev,             // rotated-rectangle IoU on the ground plane only
    BevTimesHeight,  // BEV intersection area x vertical overlap, over volumes
};

/// Rotated-box IoU. The BEV intersection is computed by clipping one
/// rectangle against the other (Sutherland-Hodgman); vertical overlap is
/// the intersection of the two z-intervals. Symmetric, in [0, 1],
/// exactly 1 for identical boxes and 0 for disjoint ones. Edge-touching
/// rectangles count as area 0.
double iou_3d(const Detection& a, const Detection& b, IouMode mode = IouMode::BevTimesHeight);

}  // namespace hydra::geometry
