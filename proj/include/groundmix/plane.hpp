#pragma once

#include <vector>

#include "groundmix/geometry.hpp"

namespace groundmix {

/// Center of the box face that rests on the ground: of the two face centers
/// center +- R*(0, h/2, 0), the one with the larger camera-frame y (y points
/// down, so larger y is closer to the ground). Ties take the + sign.
Vec3 bottom_center(const Box3D& b);

/// Least-squares plane through >= 3 points: the normal is the singular vector
/// of the centered coordinate matrix for its smallest singular value, and
/// offset = normal . centroid. The sign is fixed so that n_y >= 0 (ties:
/// n_z >= 0, then n_x >= 0).
///
/// Throws TooFewPoints for < 3 points and DegenerateGeometry when the points
/// are collinear (second-smallest singular value <= 1e-9).
GroundPlane fit_ground_plane(const std::vector<Vec3>& points);

/// True iff the boxes' bottom centers admit a plane fit (>= 3 boxes,
/// non-collinear bottom centers).
bool should_apply_groundmix(const std::vector<Box3D>& boxes);

}  // namespace groundmix
