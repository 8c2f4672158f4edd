#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "groundmix/geometry.hpp"

namespace groundmix {

/// Ground-truth object for evaluation.
struct GtObject {
    std::string image_id;
    int category = 0;
    Box3D box;
    Box2D box2d;
};

/// A scored prediction. box2d is the projection of the 3D box into the
/// image (empty when the box does not project).
struct Detection {
    std::string image_id;
    int category = 0;
    double score = 0.0;
    Box3D box;
    Box2D box2d;
};

/// Axis-aligned 2D IoU; degenerate boxes score 0.
double iou2d(const Box2D& a, const Box2D& b);

/// Exact 3D IoU for arbitrarily oriented cuboids. The intersection is the
/// convex polytope obtained by clipping one cuboid against the six face
/// half-spaces of the other; its volume comes from a centroid fan over the
/// clipped faces. Symmetric by construction (both clip orders averaged).
double iou3d(const Box3D& a, const Box3D& b);

/// Precision interpolated at 40 recall levels {1/40, ..., 1}; AP is their mean.
struct PRCurve {
    std::array<double, 40> interpolated_precision{};
    double ap = 0.0;
};

using IouFn = std::function<double(const Detection&, const GtObject&)>;

/// Greedy matching in descending score (ties keep input order): a detection
/// is a true positive when its best-IoU unmatched ground truth of the same
/// image and class reaches the threshold; each ground truth matches at most
/// once. Returns the 40-point interpolated curve.
PRCurve match_and_curve(const std::vector<Detection>& dets, const std::vector<GtObject>& gts,
                        int category, const IouFn& iou_fn, double threshold);

/// AP with 3D IoU matching at the given threshold.
double ap3d(const std::vector<Detection>& dets, const std::vector<GtObject>& gts, int category,
            double threshold = 0.5);

/// Mean AP with 2D IoU matching over thresholds 0.05, 0.10, ..., 0.95.
double ap2d(const std::vector<Detection>& dets, const std::vector<GtObject>& gts, int category);

/// Mean over x = 1..20 m of AP where a detection is a true positive iff some
/// unmatched ground truth overlaps it by more than 0.7 in 2D and the absolute
/// center-depth error is within x meters.
double ap_depth(const std::vector<Detection>& dets, const std::vector<GtObject>& gts, int category);

/// Matches detections to ground truth in 2D (IoU > 0.7); matched detections
/// have their center rescaled along the camera ray so the depth equals the
/// ground truth depth (projection preserved), then standard AP-3D at 0.5.
double ap_3dp(const std::vector<Detection>& dets, const std::vector<GtObject>& gts, int category);

}  // namespace groundmix
