#include "groundmix/plane.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace groundmix {

Vec3 bottom_center(const Box3D& b) {
    const Vec3 half = b.rotation * Vec3(0.0, 0.5 * b.dims.y(), 0.0);
    return half.y() >= 0.0 ? Vec3(b.center + half) : Vec3(b.center - half);
}

GroundPlane fit_ground_plane(const std::vector<Vec3>& points) {
    if (points.size() < 3) throw TooFewPoints("plane fit needs at least 3 points");

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());

    Eigen::Matrix3Xd centered(3, points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        centered.col(static_cast<Eigen::Index>(i)) = points[i] - centroid;

    // the normal is the left singular vector of the smallest singular value;
    // the second-smallest singular value gates collinearity
    Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(centered, Eigen::ComputeFullU);
    if (svd.singularValues()[1] <= 1e-9)
        throw DegenerateGeometry("plane fit: points are collinear");

    Vec3 n = svd.matrixU().col(2).normalized();
    const bool flip = n.y() < 0.0 || (n.y() == 0.0 && (n.z() < 0.0 || (n.z() == 0.0 && n.x() < 0.0)));
    if (flip) n = -n;

    return GroundPlane{n, n.dot(centroid)};
}

bool should_apply_groundmix(const std::vector<Box3D>& boxes) {
    if (boxes.size() < 3) return false;
    std::vector<Vec3> pts;
    pts.reserve(boxes.size());
    for (const Box3D& b : boxes) pts.push_back(bottom_center(b));
    try {
        fit_ground_plane(pts);
    } catch (const Error&) {
        return false;
    }
    return true;
}

}  // namespace groundmix
