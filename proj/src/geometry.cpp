#include "hydra/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace hydra::geometry {

double wrap_angle(double a) {
    // std::remainder lands in [-pi, pi]; shift the closed low end to +pi.
    double r = std::remainder(a, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

Pose2::Pose2(double x_, double y_, double yaw_) : x(x_), y(y_), yaw(wrap_angle(yaw_)) {}

Pose2 compose(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.yaw);
    const double s = std::sin(a.yaw);
    return Pose2(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.yaw + b.yaw);
}

Pose2 inverse(const Pose2& p) {
    const double c = std::cos(p.yaw);
    const double s = std::sin(p.yaw);
    return Pose2(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.yaw);
}

PoseDelta pose_minus(const Pose2& a, const Pose2& b) {
    return PoseDelta{a.x - b.x, a.y - b.y, wrap_angle(a.yaw - b.yaw)};
}

Detection transform_detection(const Pose2& pose, const Detection& d) {
    Detection out = d;
    const double c = std::cos(pose.yaw);
    const double s = std::sin(pose.yaw);
    out.x = pose.x + c * d.x - s * d.y;
    out.y = pose.y + s * d.x + c * d.y;
    out.yaw = wrap_angle(d.yaw + pose.yaw);
    return out;
}

DetectionSet transform_set(const Pose2& pose, const DetectionSet& set, Frame new_frame) {
    DetectionSet out;
    out.frame = new_frame;
    out.items.reserve(set.items.size());
    for (const Detection& d : set.items) out.items.push_back(transform_detection(pose, d));
    return out;
}

namespace {

struct Vec2 {
    double x;
    double y;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

std::array<Vec2, 4> bev_corners(const Detection& d) {
    const double c = std::cos(d.yaw);
    const double s = std::sin(d.yaw);
    const double hl = 0.5 * d.length;
    const double hw = 0.5 * d.width;
    // Counterclockwise in the box frame.
    const std::array<Vec2, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
    std::array<Vec2, 4> out{};
    for (int i = 0; i < 4; ++i) {
        out[i].x = d.x + c * local[i].x - s * local[i].y;
        out[i].y = d.y + s * local[i].x + c * local[i].y;
    }
    return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
    if (poly.size() < 3) return 0.0;
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of `poly` against the half-plane left of a->b.
std::vector<Vec2> clip_edge(const std::vector<Vec2>& poly, const Vec2& a, const Vec2& b) {
    std::vector<Vec2> out;
    out.reserve(poly.size() + 2);
    const Vec2 dir{b.x - a.x, b.y - a.y};
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        const double dp = cross(dir, Vec2{p.x - a.x, p.y - a.y});
        const double dq = cross(dir, Vec2{q.x - a.x, q.y - a.y});
        const bool p_in = dp >= 0.0;
        const bool q_in = dq >= 0.0;
        if (p_in) out.push_back(p);
        if (p_in != q_in) {
            const double t = dp / (dp - dq);
            out.push_back(Vec2{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
        }
    }
    return out;
}

double bev_intersection_area(const Detection& a, const Detection& b) {
    const auto ca = bev_corners(a);
    const auto cb = bev_corners(b);
    std::vector<Vec2> poly(ca.begin(), ca.end());
    for (int i = 0; i < 4 && !poly.empty(); ++i) {
        poly = clip_edge(poly, cb[i], cb[(i + 1) % 4]);
    }
    return polygon_area(poly);
}

}  // namespace

double iou_3d(const Detection& a, const Detection& b, IouMode mode) {
    const double inter2d = bev_intersection_area(a, b);
    if (inter2d <= 0.0) return 0.0;
    if (mode == IouMode::Bev) {
        const double area_a = a.length * a.width;
        const double area_b = b.length * b.width;
        const double denom = area_a + area_b - inter2d;
        return denom > 0.0 ? std::clamp(inter2d / denom, 0.0, 1.0) : 0.0;
    }
    const double lo = std::max(a.z - 0.5 * a.height, b.z - 0.5 * b.height);
    const double hi = std::min(a.z + 0.5 * a.height, b.z + 0.5 * b.height);
    const double dz = hi - lo;
    if (dz <= 0.0) return 0.0;
    const double inter = inter2d * dz;
    const double vol_a = a.length * a.width * a.height;
    const double vol_b = b.length * b.width * b.height;
    const double denom = vol_a + vol_b - inter;
    return denom > 0.0 ? std::clamp(inter / denom, 0.0, 1.0) : 0.0;
}

}  // namespace hydra::geometry
