#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "hydra/geometry.hpp"
#include "hydra/rng.hpp"
#include "oracles.hpp"

using namespace hydra::geometry;
using oracles::make_box;

namespace {
void check_pose_eq(const Pose2& a, const Pose2& b, double tol) {
    CHECK(std::abs(a.x - b.x) < tol);
    CHECK(std::abs(a.y - b.y) < tol);
    CHECK(std::abs(wrap_angle(a.yaw - b.yaw)) < tol);
}
}  // namespace

TEST_CASE("wrap_angle lands in (-pi, pi]") {
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(6.2) == doctest::Approx(6.2 - 2.0 * kPi).epsilon(1e-12));
    hydra::rng::Stream s(7);
    for (int i = 0; i < 1000; ++i) {
        const double w = wrap_angle(s.uniform(-50.0, 50.0));
        CHECK(w > -kPi);
        CHECK(w <= kPi);
    }
}

TEST_CASE("compose basics") {
    const Pose2 p(2.0, -1.0, 0.7);
    check_pose_eq(compose(Pose2::identity(), p), p, 1e-15);
    check_pose_eq(compose(p, Pose2::identity()), p, 1e-15);

    // Quarter turn then unit step: rotation moves the step onto +y.
    const Pose2 r = compose(Pose2(1.0, 0.0, kPi / 2.0), Pose2(1.0, 0.0, 0.0));
    CHECK(r.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.yaw == doctest::Approx(kPi / 2.0));

    check_pose_eq(compose(p, inverse(p)), Pose2::identity(), 1e-12);
    check_pose_eq(compose(inverse(p), p), Pose2::identity(), 1e-12);
}

TEST_CASE("inverse basics") {
    check_pose_eq(inverse(Pose2::identity()), Pose2::identity(), 1e-15);
    check_pose_eq(inverse(Pose2(3.0, 4.0, 0.0)), Pose2(-3.0, -4.0, 0.0), 1e-15);
    const Pose2 inv = inverse(Pose2(1.0, 0.0, kPi / 2.0));
    CHECK(std::abs(inv.x) < 1e-12);
    CHECK(inv.y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(inv.yaw == doctest::Approx(-kPi / 2.0));
}

TEST_CASE("group laws against the homogeneous-matrix oracle") {
    hydra::rng::Stream s(11);
    for (int i = 0; i < 500; ++i) {
        const Pose2 a = oracles::random_pose(s);
        const Pose2 b = oracles::random_pose(s);
        const Pose2 c = oracles::random_pose(s);

        check_pose_eq(compose(a, b), oracles::compose_ref(a, b), 1e-9);
        check_pose_eq(inverse(a), oracles::inverse_ref(a), 1e-9);

        // Associativity.
        check_pose_eq(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-9);
        // Identity and inverse laws.
        check_pose_eq(compose(a, inverse(a)), Pose2::identity(), 1e-12);
    }
}

TEST_CASE("pose_minus wraps and is antisymmetric") {
    const PoseDelta zero = pose_minus(Pose2(1, 2, 3), Pose2(1, 2, 3));
    CHECK(zero.dx == 0.0);
    CHECK(zero.dy == 0.0);
    CHECK(zero.dyaw == 0.0);

    // Wrapped, not 6.2: 3.1 - (-3.1) - 2*pi.
    const PoseDelta d = pose_minus(Pose2(0, 0, 3.1), Pose2(0, 0, -3.1));
    CHECK(d.dyaw == doctest::Approx(6.2 - 2.0 * kPi).epsilon(1e-12));
    CHECK(d.dyaw == doctest::Approx(-0.0832).epsilon(1e-3));

    const PoseDelta e = pose_minus(Pose2(1, 2, 0.5), Pose2(0, 0, 0));
    CHECK(e.dx == 1.0);
    CHECK(e.dy == 2.0);
    CHECK(e.dyaw == doctest::Approx(0.5));

    hydra::rng::Stream s(13);
    for (int i = 0; i < 300; ++i) {
        const Pose2 a = oracles::random_pose(s);
        const Pose2 b = oracles::random_pose(s);
        const PoseDelta ab = pose_minus(a, b);
        const PoseDelta ba = pose_minus(b, a);
        CHECK(std::abs(ab.dx + ba.dx) < 1e-12);
        CHECK(std::abs(ab.dy + ba.dy) < 1e-12);
        CHECK(std::abs(wrap_angle(ab.dyaw + ba.dyaw)) < 1e-12);
    }
}

TEST_CASE("transform_detection") {
    const Detection d = make_box(1.0, 0.0, 0.5, 2.0, 1.0, 1.0, 0.0, 1, 0.8);

    const Detection same = transform_detection(Pose2::identity(), d);
    CHECK(same.x == d.x);
    CHECK(same.y == d.y);
    CHECK(same.yaw == d.yaw);
    CHECK(same.confidence == d.confidence);

    // Half turn about the origin.
    const Detection flipped = transform_detection(Pose2(0, 0, kPi), d);
    CHECK(flipped.x == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(flipped.y) < 1e-12);
    CHECK(flipped.yaw == doctest::Approx(kPi));
    CHECK(flipped.z == d.z);
    CHECK(flipped.length == d.length);

    hydra::rng::Stream s(17);
    for (int i = 0; i < 200; ++i) {
        const Pose2 p = oracles::random_pose(s);
        const Detection box = oracles::random_box(s);
        const Detection round = transform_detection(inverse(p), transform_detection(p, box));
        CHECK(std::abs(round.x - box.x) < 1e-9);
        CHECK(std::abs(round.y - box.y) < 1e-9);
        CHECK(std::abs(wrap_angle(round.yaw - box.yaw)) < 1e-9);

        // Center agrees with the matrix oracle.
        const Detection moved = transform_detection(p, box);
        double ox = 0.0;
        double oy = 0.0;
        oracles::apply_point_ref(p, box.x, box.y, ox, oy);
        CHECK(std::abs(moved.x - ox) < 1e-9);
        CHECK(std::abs(moved.y - oy) < 1e-9);
    }
}

TEST_CASE("iou_3d analytic cases") {
    const Detection cube = make_box(0, 0, 0, 1, 1, 1, 0.0);
    CHECK(iou_3d(cube, cube) == doctest::Approx(1.0).epsilon(1e-12));

    // Two unit cubes offset by 0.5 m in x: 0.5 / (1 + 1 - 0.5) = 1/3.
    const Detection shifted = make_box(0.5, 0, 0, 1, 1, 1, 0.0);
    CHECK(iou_3d(cube, shifted) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const Detection far = make_box(100.0, 0, 0, 1, 1, 1, 0.0);
    CHECK(iou_3d(cube, far) == 0.0);

    // Edge-touching rectangles count as zero, no epsilon inflation.
    const Detection touching = make_box(1.0, 0, 0, 1, 1, 1, 0.0);
    CHECK(iou_3d(cube, touching) == 0.0);

    // 45-degree rotated square over an equal axis-aligned one:
    // intersection is the regular octagon with area 8*(sqrt(2)-1) for s=2.
    const Detection a = make_box(0, 0, 0, 2, 2, 1, 0.0);
    const Detection b = make_box(0, 0, 0, 2, 2, 1, kPi / 4.0);
    const double octagon = 8.0 * (std::sqrt(2.0) - 1.0);
    CHECK(iou_3d(a, b) == doctest::Approx(octagon / (8.0 - octagon)).epsilon(1e-9));
}

TEST_CASE("iou_3d bev mode ignores the vertical axis") {
    const Detection lo = make_box(0, 0, 0.0, 2, 2, 1, 0.3);
    const Detection hi = make_box(0, 0, 5.0, 2, 2, 1, 0.3);
    CHECK(iou_3d(lo, hi, IouMode::BevTimesHeight) == 0.0);
    CHECK(iou_3d(lo, hi, IouMode::Bev) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("iou_3d symmetry, range, rigid invariance") {
    hydra::rng::Stream s(23);
    for (int i = 0; i < 300; ++i) {
        Detection a = oracles::random_box(s, 3.0);
        Detection b = oracles::random_box(s, 3.0);
        a.z = s.uniform(-0.5, 0.5);
        b.z = s.uniform(-0.5, 0.5);
        const double ab = iou_3d(a, b);
        const double ba = iou_3d(b, a);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(std::abs(ab - ba) < 1e-9);
        CHECK(iou_3d(a, a) == doctest::Approx(1.0).epsilon(1e-12));

        const Pose2 t = oracles::random_pose(s);
        const double moved = iou_3d(transform_detection(t, a), transform_detection(t, b));
        CHECK(std::abs(moved - ab) < 1e-9);
    }
}

TEST_CASE("iou_3d tracks the Monte Carlo oracle (smoke-sized)") {
    hydra::rng::Stream s(29);
    for (int i = 0; i < 10; ++i) {
        Detection a = oracles::random_box(s, 1.5);
        Detection b = oracles::random_box(s, 1.5);
        b.z = a.z + s.uniform(-0.3, 0.3);
        const double exact = iou_3d(a, b);
        const double approx = oracles::mc_iou(a, b, 200000, 1000 + static_cast<unsigned>(i));
        CHECK(std::abs(exact - approx) < 0.02);
    }
}
