#include <doctest.h>

#include <chrono>
#include <cmath>

#include "fixtures.hpp"
#include "groundmix/plane.hpp"
#include "oracles.hpp"

using namespace groundmix;

TEST_SUITE_BEGIN("plane");

TEST_CASE("bottom_center of simple boxes") {
    Box3D cube;
    cube.dims = Vec3(1, 1, 1);
    CHECK((bottom_center(cube) - Vec3(0, 0.5, 0)).norm() < 1e-12);

    Box3D flipped = cube;
    flipped.rotation = Rotation3::about_z(M_PI);
    CHECK((bottom_center(flipped) - Vec3(0, 0.5, 0)).norm() < 1e-12);

    Box3D tall;
    tall.dims = Vec3(2, 4, 6);
    tall.center = Vec3(0, 0, 10);
    CHECK((bottom_center(tall) - Vec3(0, 2, 10)).norm() < 1e-12);
}

TEST_CASE("fit recovers an exact horizontal plane") {
    const GroundPlane p = fit_ground_plane({Vec3(0, 1, 0), Vec3(1, 1, 1), Vec3(2, 1, 0)});
    CHECK((p.normal - Vec3(0, 1, 0)).norm() < 1e-12);
    CHECK(p.offset == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit is exact on coplanar points") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        Vec3 n(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        if (n.norm() < 1e-3) continue;
        n.normalize();
        const double d = rng.uniform(-5, 5);
        // span the plane with two tangents
        const Vec3 t1 = n.cross(std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).normalized();
        const Vec3 t2 = n.cross(t1);
        std::vector<Vec3> pts;
        for (int i = 0; i < 12; ++i)
            pts.push_back(d * n + rng.uniform(-10, 10) * t1 + rng.uniform(-10, 10) * t2);
        const GroundPlane p = fit_ground_plane(pts);
        for (const Vec3& q : pts) CHECK(std::abs(p.signed_distance(q)) < 1e-9);
    }
}

TEST_CASE("fit beats a large random search on noisy data") {
    Rng rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Vec3> pts;
        for (int i = 0; i < 30; ++i) {
            const double nx = rng.uniform(-0.01, 0.01), nz = rng.uniform(-0.01, 0.01);
            pts.push_back(Vec3(rng.uniform(-5, 5), 2.0 + nx + nz, rng.uniform(5, 40)));
        }
        const GroundPlane fitted = fit_ground_plane(pts);
        const GroundPlane searched = oracles::random_search_plane(pts, 1000, rng);
        CHECK(oracles::plane_sq_residual(fitted, pts) <=
              oracles::plane_sq_residual(searched, pts) + 1e-12);
    }
}

TEST_CASE("fit recovers a noisy horizontal plane within half a degree") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec3> pts;
        for (int i = 0; i < 50; ++i) {
            // box-averaged uniform noise stands in for a 0.01 m gaussian
            double noise = 0.0;
            for (int k = 0; k < 12; ++k) noise += rng.uniform(-0.5, 0.5);
            noise *= 0.01;
            pts.push_back(Vec3(rng.uniform(-5, 5), 2.0 + noise, rng.uniform(5, 40)));
        }
        const GroundPlane p = fit_ground_plane(pts);
        const double angle = std::acos(std::clamp(p.normal.dot(Vec3(0, 1, 0)), -1.0, 1.0));
        CHECK(angle < 0.5 * M_PI / 180.0);
    }
}

TEST_CASE("fit error conditions") {
    CHECK_THROWS_AS(fit_ground_plane({Vec3(0, 0, 0), Vec3(1, 1, 1)}), TooFewPoints);
    CHECK_THROWS_AS(fit_ground_plane({Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2)}),
                    DegenerateGeometry);
    CHECK_THROWS_AS(fit_ground_plane({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(5, 0, 0), Vec3(9, 0, 0)}),
                    DegenerateGeometry);
}

TEST_CASE("fit is invariant under input permutation") {
    Rng rng(24);
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i)
        pts.push_back(Vec3(rng.uniform(-5, 5), 2.0 + rng.uniform(-0.05, 0.05), rng.uniform(5, 40)));
    const GroundPlane a = fit_ground_plane(pts);
    for (int shuffle = 0; shuffle < 10; ++shuffle) {
        for (std::size_t i = pts.size(); i > 1; --i)
            std::swap(pts[i - 1], pts[rng.uniform_index(i)]);
        const GroundPlane b = fit_ground_plane(pts);
        CHECK((a.normal - b.normal).norm() < 1e-9);
        CHECK(std::abs(a.offset - b.offset) < 1e-9);
    }
}

TEST_CASE("fit is equivariant under rigid transforms") {
    Rng rng(25);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Vec3> pts;
        for (int i = 0; i < 15; ++i)
            pts.push_back(Vec3(rng.uniform(-5, 5), 2.0 + rng.uniform(-0.02, 0.02), rng.uniform(5, 40)));
        const GroundPlane base = fit_ground_plane(pts);

        const Rotation3 q = fixtures::random_rotation(rng);
        const Vec3 t(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        std::vector<Vec3> moved;
        for (const Vec3& p : pts) moved.push_back(q * p + t);
        const GroundPlane transformed = fit_ground_plane(moved);

        // expected: normal rotates, offset follows a transformed on-plane point
        Vec3 n_exp = q * base.normal;
        double d_exp = n_exp.dot(q * (base.offset * base.normal) + t);
        if (n_exp.y() < 0.0 || (n_exp.y() == 0.0 && (n_exp.z() < 0.0 || (n_exp.z() == 0.0 && n_exp.x() < 0.0)))) {
            n_exp = -n_exp;
            d_exp = -d_exp;
        }
        CHECK((transformed.normal - n_exp).norm() < 1e-6);
        CHECK(std::abs(transformed.offset - d_exp) < 1e-6);
    }
}

TEST_CASE("fit runs in well under a millisecond") {
    Rng rng(26);
    std::vector<std::vector<Vec3>> instances;
    for (int i = 0; i < 200; ++i) {
        std::vector<Vec3> pts;
        for (int k = 0; k < 50; ++k)
            pts.push_back(Vec3(rng.uniform(-5, 5), 2.0 + rng.uniform(-0.02, 0.02), rng.uniform(5, 40)));
        instances.push_back(std::move(pts));
    }
    const auto start = std::chrono::steady_clock::now();
    double sink = 0.0;
    for (const auto& pts : instances) sink += fit_ground_plane(pts).offset;
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(sink != 0.0);
    CHECK(std::chrono::duration<double, std::milli>(elapsed).count() / instances.size() < 1.0);
}

TEST_CASE("should_apply_groundmix gating") {
    const Vec3 dims(1.8, 1.5, 4.2);
    std::vector<Box3D> two = {fixtures::grounded_box(-2, 20, dims, 2.0, 0, 0),
                              fixtures::grounded_box(2, 25, dims, 2.0, 0, 0)};
    CHECK_FALSE(should_apply_groundmix(two));

    std::vector<Box3D> three = two;
    three.push_back(fixtures::grounded_box(0, 32, dims, 2.0, 0.5, 0));
    CHECK(should_apply_groundmix(three));

    // bottom centers on one line
    std::vector<Box3D> collinear = {fixtures::grounded_box(0, 20, dims, 2.0, 0, 0),
                                    fixtures::grounded_box(0, 30, dims, 2.0, 0, 0),
                                    fixtures::grounded_box(0, 40, dims, 2.0, 0, 0)};
    CHECK_FALSE(should_apply_groundmix(collinear));
}

TEST_SUITE_END();
