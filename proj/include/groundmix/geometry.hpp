#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <utility>

#include "groundmix/errors.hpp"

namespace groundmix {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole camera intrinsics.
///
/// Camera frame convention used throughout: x right, y down, z forward
/// (optical axis). Pixel coordinates: x right, y down, origin at the top-left
/// image corner.
struct CameraIntrinsics {
    double fx = 0.0;  ///< focal length x, pixels
    double fy = 0.0;  ///< focal length y, pixels
    double cx = 0.0;  ///< principal point x, pixels
    double cy = 0.0;  ///< principal point y, pixels

    bool valid() const { return fx > 0.0 && fy > 0.0; }

    /// Upper-triangular 3x3 matrix [[fx,0,cx],[0,fy,cy],[0,0,1]].
    Mat3 matrix() const {
        Mat3 k;
        k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
        return k;
    }
};

/// Element of SO(3): orthonormal, det +1. Stored row-major when serialized.
struct Rotation3 {
    Mat3 m = Mat3::Identity();

    static Rotation3 identity() { return Rotation3{}; }

    /// Validates orthonormality (1e-9 per entry) and det = +1 (1e-9).
    static Rotation3 from_matrix(const Mat3& r);

    /// Rodrigues formula; axis need not be normalized (must be non-zero).
    static Rotation3 from_axis_angle(const Vec3& axis, double angle);

    /// In-plane rotation about the camera z-axis.
    static Rotation3 about_z(double angle);

    bool is_valid(double tol = 1e-9) const;

    Rotation3 transposed() const { return Rotation3{m.transpose()}; }
    Vec3 col(int i) const { return m.col(i); }

    friend Rotation3 operator*(const Rotation3& a, const Rotation3& b) {
        return Rotation3{a.m * b.m};
    }
    Vec3 operator*(const Vec3& v) const { return m * v; }
};

/// Oriented 3D bounding box in the camera frame.
struct Box3D {
    Vec3 center = Vec3::Zero();  ///< meters, camera frame
    Vec3 dims = Vec3::Zero();    ///< (w, h, l): extent along box x, y, z axes
    Rotation3 rotation;          ///< egocentric (box frame -> camera frame)
    int category = 0;
    std::optional<std::int64_t> track_id;
    std::optional<double> score;  ///< detection confidence in [0, 1]

    double volume() const { return dims.x() * dims.y() * dims.z(); }
};

/// Plane normal.dot(p) = offset in camera coordinates, |normal| = 1.
struct GroundPlane {
    Vec3 normal = Vec3(0.0, 1.0, 0.0);
    double offset = 0.0;

    double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

/// Axis-aligned 2D box, [x0, x1] x [y0, y1] in pixels.
struct Box2D {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() > 0.0 && height() > 0.0 ? width() * height() : 0.0; }
    bool empty() const { return area() <= 0.0; }

    Box2D scaled(double s) const { return Box2D{x0 * s, y0 * s, x1 * s, y1 * s}; }
    bool contains(const Box2D& inner, double tol = 0.0) const {
        return inner.x0 >= x0 - tol && inner.y0 >= y0 - tol && inner.x1 <= x1 + tol &&
               inner.y1 <= y1 + tol;
    }
    bool contains_point(double x, double y, double tol = 0.0) const {
        return x >= x0 - tol && x <= x1 + tol && y >= y0 - tol && y <= y1 + tol;
    }
};

Box2D intersect(const Box2D& a, const Box2D& b);
double intersection_area(const Box2D& a, const Box2D& b);

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

/// Pinhole projection (fx*x/z + cx, fy*y/z + cy). Throws NonPositiveDepth if p.z <= 0.
Vec2 project(const CameraIntrinsics& K, const Vec3& p);

/// Point on the ray through px at the given depth z (no validity checks on z).
Vec3 unproject_depth(const CameraIntrinsics& K, const Vec2& px, double z);

/// Intersects the ray through px with the plane.
/// Throws RayParallelToPlane if |normal . ray| <= 1e-9, IntersectionBehindCamera
/// if the intersection has non-positive depth.
Vec3 unproject_to_plane(const CameraIntrinsics& K, const Vec2& px, const GroundPlane& plane);

/// Non-throwing variant; nullopt on either failure mode.
std::optional<Vec3> try_unproject_to_plane(const CameraIntrinsics& K, const Vec2& px,
                                           const GroundPlane& plane);

// ---------------------------------------------------------------------------
// Rotation representations
// ---------------------------------------------------------------------------

/// Orthonormalizes two stacked 3-vectors (v[0..2], v[3..5]) into a rotation:
/// column 0 = normalized first triple, column 1 = normalized residual of the
/// second, column 2 = their cross product. Throws DegenerateInput if the first
/// triple is (near) zero or the triples are (near) parallel (residual <= 1e-9
/// after normalization).
Rotation3 gram_schmidt_rotation(const std::array<double, 6>& v);

/// Allocentric <-> egocentric conversion. The allocentric frame is reached by
/// composing with the rotation that maps the unit viewing ray (center
/// normalized) onto the optical axis (0,0,1), built in axis-angle form about
/// ray x axis_z. Identity for centers on the optical axis. Throws ZeroCenter
/// when |center| ~ 0.
Rotation3 egocentric_to_allocentric(const Rotation3& r, const Vec3& center);
Rotation3 allocentric_to_egocentric(const Rotation3& r, const Vec3& center);

/// Builds a full rotation from a single yaw angle about the ground normal:
/// R = Rx(roll) * Ry(pitch) * Rz(yaw), with roll and pitch solved so that the
/// box z-axis (third column) equals ground_normal. ground_normal must be unit.
Rotation3 single_angle_to_so3(double yaw, const Vec3& ground_normal);

// ---------------------------------------------------------------------------
// Box geometry
// ---------------------------------------------------------------------------

/// The 8 corners center + R * (sx*w/2, sy*h/2, sz*l/2) in lexicographic sign
/// order: index bit 2 = sx, bit 1 = sy, bit 0 = sz with 0 meaning '-':
/// (---), (--+), (-+-), (-++), (+--), (+-+), (++-), (+++).
std::array<Vec3, 8> box_corners(const Box3D& b);

/// The 12 edges of a box as corner-index pairs (matching box_corners order).
extern const std::array<std::pair<int, int>, 12> kBoxEdges;

/// Axis-aligned hull of the projections of all corners with z > 0, clipped to
/// [0,W] x [0,H]. Returns nullopt when no corner is in front of the camera or
/// the clipped box has zero area.
std::optional<Box2D> project_box_to_2d(const Box3D& b, const CameraIntrinsics& K, int width,
                                       int height);

}  // namespace groundmix
