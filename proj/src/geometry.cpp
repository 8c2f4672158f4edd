#include "groundmix/geometry.hpp"

#include <cmath>

namespace groundmix {

namespace {
constexpr double kDegenerate = 1e-9;
}

Rotation3 Rotation3::from_matrix(const Mat3& r) {
    Rotation3 rot{r};
    if (!rot.is_valid()) throw ValidationError("matrix is not a rotation (orthonormal, det +1)");
    return rot;
}

bool Rotation3::is_valid(double tol) const {
    const Mat3 gram = m.transpose() * m;
    if (((gram - Mat3::Identity()).array().abs() > tol).any()) return false;
    return std::abs(m.determinant() - 1.0) <= tol;
}

Rotation3 Rotation3::from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n <= kDegenerate) throw DegenerateInput("axis-angle: zero axis");
    const Vec3 u = axis / n;
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 ux;
    ux << 0, -u.z(), u.y(), u.z(), 0, -u.x(), -u.y(), u.x(), 0;
    return Rotation3{Mat3(Mat3::Identity() * c + ux * s + (1.0 - c) * (u * u.transpose()))};
}

Rotation3 Rotation3::about_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return Rotation3{r};
}

Box2D intersect(const Box2D& a, const Box2D& b) {
    return Box2D{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
                 std::min(a.y1, b.y1)};
}

double intersection_area(const Box2D& a, const Box2D& b) {
    return intersect(a, b).area();
}

Vec2 project(const CameraIntrinsics& K, const Vec3& p) {
    if (p.z() <= 0.0) throw NonPositiveDepth("project: point depth must be positive");
    return Vec2(K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy);
}

Vec3 unproject_depth(const CameraIntrinsics& K, const Vec2& px, double z) {
    return Vec3((px.x() - K.cx) / K.fx * z, (px.y() - K.cy) / K.fy * z, z);
}

Vec3 unproject_to_plane(const CameraIntrinsics& K, const Vec2& px, const GroundPlane& plane) {
    const Vec3 dir((px.x() - K.cx) / K.fx, (px.y() - K.cy) / K.fy, 1.0);
    const double denom = plane.normal.dot(dir);
    if (std::abs(denom) <= kDegenerate) throw RayParallelToPlane("unproject_to_plane: ray parallel");
    const double t = plane.offset / denom;
    if (t <= 0.0) throw IntersectionBehindCamera("unproject_to_plane: intersection behind camera");
    return t * dir;
}

std::optional<Vec3> try_unproject_to_plane(const CameraIntrinsics& K, const Vec2& px,
                                           const GroundPlane& plane) {
    const Vec3 dir((px.x() - K.cx) / K.fx, (px.y() - K.cy) / K.fy, 1.0);
    const double denom = plane.normal.dot(dir);
    if (std::abs(denom) <= kDegenerate) return std::nullopt;
    const double t = plane.offset / denom;
    if (t <= 0.0) return std::nullopt;
    return t * dir;
}

Rotation3 gram_schmidt_rotation(const std::array<double, 6>& v) {
    const Vec3 a(v[0], v[1], v[2]);
    const Vec3 b(v[3], v[4], v[5]);
    const double na = a.norm();
    if (na <= kDegenerate) throw DegenerateInput("gram_schmidt: first triple is zero");
    const Vec3 c0 = a / na;
    const Vec3 residual = b - c0.dot(b) * c0;
    const double nr = residual.norm();
    if (nr <= kDegenerate) throw DegenerateInput("gram_schmidt: triples are parallel");
    const Vec3 c1 = residual / nr;
    const Vec3 c2 = c0.cross(c1);
    Mat3 r;
    r.col(0) = c0;
    r.col(1) = c1;
    r.col(2) = c2;
    return Rotation3{r};
}

namespace {

/// Rotation taking the unit viewing ray of `center` onto the optical axis.
Rotation3 ray_to_axis(const Vec3& center) {
    const double n = center.norm();
    if (n <= kDegenerate) throw ZeroCenter("allocentric conversion: zero center");
    const Vec3 ray = center / n;
    const Vec3 axis = ray.cross(Vec3::UnitZ());
    const double s = axis.norm();
    const double c = ray.dot(Vec3::UnitZ());
    if (s <= kDegenerate) {
        if (c > 0.0) return Rotation3::identity();
        // ray opposite to the optical axis: any perpendicular axis, half turn
        return Rotation3::from_axis_angle(Vec3::UnitX(), M_PI);
    }
    return Rotation3::from_axis_angle(axis / s, std::atan2(s, c));
}

}  // namespace

Rotation3 egocentric_to_allocentric(const Rotation3& r, const Vec3& center) {
    return ray_to_axis(center) * r;
}

Rotation3 allocentric_to_egocentric(const Rotation3& r, const Vec3& center) {
    return ray_to_axis(center).transposed() * r;
}

Rotation3 single_angle_to_so3(double yaw, const Vec3& ground_normal) {
    const double nx = std::clamp(ground_normal.x(), -1.0, 1.0);
    const double pitch = std::asin(nx);
    // roll chosen so Rx(roll)*Ry(pitch) maps e_z onto the normal; when the
    // normal is (+-1, 0, 0) the roll is unconstrained and fixed to 0.
    const double roll = (std::abs(ground_normal.y()) <= kDegenerate &&
                         std::abs(ground_normal.z()) <= kDegenerate)
                            ? 0.0
                            : std::atan2(-ground_normal.y(), ground_normal.z());
    const Rotation3 rx = Rotation3::from_axis_angle(Vec3::UnitX(), roll);
    const Rotation3 ry = Rotation3::from_axis_angle(Vec3::UnitY(), pitch);
    const Rotation3 rz = Rotation3::about_z(yaw);
    return rx * ry * rz;
}

const std::array<std::pair<int, int>, 12> kBoxEdges = {{{0, 1},
                                                        {0, 2},
                                                        {0, 4},
                                                        {1, 3},
                                                        {1, 5},
                                                        {2, 3},
                                                        {2, 6},
                                                        {3, 7},
                                                        {4, 5},
                                                        {4, 6},
                                                        {5, 7},
                                                        {6, 7}}};

std::array<Vec3, 8> box_corners(const Box3D& b) {
    const Vec3 h = 0.5 * b.dims;
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
        const double sx = (i & 4) ? 1.0 : -1.0;
        const double sy = (i & 2) ? 1.0 : -1.0;
        const double sz = (i & 1) ? 1.0 : -1.0;
        out[i] = b.center + b.rotation * Vec3(sx * h.x(), sy * h.y(), sz * h.z());
    }
    return out;
}

std::optional<Box2D> project_box_to_2d(const Box3D& b, const CameraIntrinsics& K, int width,
                                       int height) {
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    bool any = false;
    for (const Vec3& c : box_corners(b)) {
        if (c.z() <= 0.0) continue;
        const Vec2 px = project(K, c);
        x0 = std::min(x0, px.x());
        y0 = std::min(y0, px.y());
        x1 = std::max(x1, px.x());
        y1 = std::max(y1, px.y());
        any = true;
    }
    if (!any) return std::nullopt;
    const Box2D clipped = intersect(Box2D{x0, y0, x1, y1},
                                    Box2D{0.0, 0.0, static_cast<double>(width),
                                          static_cast<double>(height)});
    if (clipped.empty()) return std::nullopt;
    return clipped;
}

}  // namespace groundmix
