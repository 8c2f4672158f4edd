#include "groundmix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace groundmix {

double iou2d(const Box2D& a, const Box2D& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

// ---------------------------------------------------------------------------
// Exact oriented-cuboid IoU
// ---------------------------------------------------------------------------

namespace {

constexpr double kOnPlane = 1e-9;

using Face = std::vector<Vec3>;

std::vector<Face> box_faces(const Box3D& b) {
    const auto c = box_corners(b);
    return {
        {c[0], c[1], c[3], c[2]},  // x-
        {c[4], c[5], c[7], c[6]},  // x+
        {c[0], c[1], c[5], c[4]},  // y-
        {c[2], c[3], c[7], c[6]},  // y+
        {c[0], c[2], c[6], c[4]},  // z-
        {c[1], c[3], c[7], c[5]},  // z+
    };
}

/// Clips every face against n.p <= off and closes the cut with a cap polygon.
void clip_by_halfspace(std::vector<Face>& faces, const Vec3& n, double off) {
    std::vector<Face> out;
    std::vector<Vec3> boundary;
    bool cut = false;  // a grazing plane must not spawn a cap over an existing face
    for (const Face& f : faces) {
        Face res;
        const std::size_t m = f.size();
        for (std::size_t k = 0; k < m; ++k) {
            const Vec3& a = f[k];
            const Vec3& b = f[(k + 1) % m];
            const double da = n.dot(a) - off;
            const double db = n.dot(b) - off;
            const bool ina = da <= kOnPlane;
            const bool inb = db <= kOnPlane;
            if (!ina) cut = true;
            if (ina) {
                res.push_back(a);
                if (da >= -kOnPlane) boundary.push_back(a);
            }
            if (ina != inb) {
                const double t = da / (da - db);
                const Vec3 q = a + t * (b - a);
                res.push_back(q);
                boundary.push_back(q);
            }
        }
        if (res.size() >= 3) out.push_back(std::move(res));
    }

    // cap: order the boundary points around their centroid in the cut plane
    if (cut && boundary.size() >= 3) {
        std::vector<Vec3> uniq;
        for (const Vec3& p : boundary) {
            bool dup = false;
            for (const Vec3& q : uniq)
                if ((p - q).squaredNorm() < 1e-18) {
                    dup = true;
                    break;
                }
            if (!dup) uniq.push_back(p);
        }
        if (uniq.size() >= 3) {
            Vec3 centroid = Vec3::Zero();
            for (const Vec3& p : uniq) centroid += p;
            centroid /= static_cast<double>(uniq.size());
            Vec3 u = n.cross(std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).normalized();
            const Vec3 w = n.cross(u);
            std::sort(uniq.begin(), uniq.end(), [&](const Vec3& p, const Vec3& q) {
                const Vec3 dp = p - centroid, dq = q - centroid;
                return std::atan2(dp.dot(w), dp.dot(u)) < std::atan2(dq.dot(w), dq.dot(u));
            });
            out.push_back(std::move(uniq));
        }
    }
    faces = std::move(out);
}

double convex_volume(const std::vector<Face>& faces) {
    if (faces.empty()) return 0.0;
    Vec3 centroid = Vec3::Zero();
    std::size_t n = 0;
    for (const Face& f : faces)
        for (const Vec3& p : f) {
            centroid += p;
            ++n;
        }
    if (n == 0) return 0.0;
    centroid /= static_cast<double>(n);
    double vol = 0.0;
    for (const Face& f : faces) {
        for (std::size_t k = 1; k + 1 < f.size(); ++k) {
            const Vec3 a = f[0] - centroid;
            const Vec3 b = f[k] - centroid;
            const Vec3 c = f[k + 1] - centroid;
            vol += std::abs(a.dot(b.cross(c)));
        }
    }
    return vol / 6.0;
}

/// Volume of a intersected with b: clip a's faces by b's six half-spaces.
double clipped_volume(const Box3D& a, const Box3D& b) {
    std::vector<Face> faces = box_faces(a);
    const Vec3 half = 0.5 * b.dims;
    for (int axis = 0; axis < 3 && !faces.empty(); ++axis) {
        const Vec3 dir = b.rotation.col(axis);
        const double center_proj = dir.dot(b.center);
        clip_by_halfspace(faces, dir, center_proj + half[axis]);
        clip_by_halfspace(faces, -dir, -(center_proj - half[axis]));
    }
    return convex_volume(faces);
}

}  // namespace

double iou3d(const Box3D& a, const Box3D& b) {
    const double va = a.volume();
    const double vb = b.volume();
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    double vi = 0.5 * (clipped_volume(a, b) + clipped_volume(b, a));
    vi = std::min(vi, std::min(va, vb));
    const double uni = va + vb - vi;
    if (uni <= 0.0) return 0.0;
    return std::clamp(vi / uni, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Matching and average precision
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> ranked_detections(const std::vector<Detection>& dets, int category) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dets.size(); ++i)
        if (dets[i].category == category) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    return idx;
}

std::size_t count_gts(const std::vector<GtObject>& gts, int category) {
    return static_cast<std::size_t>(
        std::count_if(gts.begin(), gts.end(), [&](const GtObject& g) { return g.category == category; }));
}

PRCurve curve_from_flags(const std::vector<char>& tp, std::size_t num_gt) {
    PRCurve curve;
    if (num_gt == 0) return curve;

    std::vector<double> recall(tp.size()), precision(tp.size());
    std::size_t cum_tp = 0;
    for (std::size_t i = 0; i < tp.size(); ++i) {
        cum_tp += tp[i] ? 1 : 0;
        recall[i] = static_cast<double>(cum_tp) / static_cast<double>(num_gt);
        precision[i] = static_cast<double>(cum_tp) / static_cast<double>(i + 1);
    }

    // sweep from the right so each level sees the max precision at >= recall
    double running_max = 0.0;
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(tp.size()) - 1;
    for (int level = 40; level >= 1; --level) {
        const double r = static_cast<double>(level) / 40.0;
        while (i >= 0 && recall[static_cast<std::size_t>(i)] >= r) {
            running_max = std::max(running_max, precision[static_cast<std::size_t>(i)]);
            --i;
        }
        curve.interpolated_precision[static_cast<std::size_t>(level - 1)] = running_max;
    }
    curve.ap = std::accumulate(curve.interpolated_precision.begin(),
                               curve.interpolated_precision.end(), 0.0) /
               40.0;
    return curve;
}

/// Greedy matcher. In plain mode a detection takes its best-IoU unmatched
/// ground truth and is a TP iff that IoU reaches the threshold. In eligible
/// mode the candidate set is first restricted by `eligible`, the best-IoU
/// eligible ground truth is consumed, and matched detections may be reported
/// through `on_match`.
std::vector<char> greedy_match(
    const std::vector<Detection>& dets, const std::vector<GtObject>& gts, int category,
    const IouFn& iou_fn, double threshold,
    const std::function<bool(const Detection&, const GtObject&)>& eligible = nullptr,
    const std::function<void(std::size_t det_idx, std::size_t gt_idx)>& on_match = nullptr) {
    const std::vector<std::size_t> order = ranked_detections(dets, category);
    std::vector<char> matched(gts.size(), 0);
    std::vector<char> tp;
    tp.reserve(order.size());
    for (const std::size_t di : order) {
        const Detection& d = dets[di];
        double best_iou = -1.0;
        std::size_t best_gt = gts.size();
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            const GtObject& g = gts[gi];
            if (matched[gi] || g.category != category || g.image_id != d.image_id) continue;
            if (eligible && !eligible(d, g)) continue;
            const double iou = iou_fn(d, g);
            if (iou > best_iou) {
                best_iou = iou;
                best_gt = gi;
            }
        }
        bool is_tp = false;
        if (best_gt < gts.size()) {
            is_tp = eligible ? true : best_iou >= threshold;
            if (is_tp) {
                matched[best_gt] = 1;
                if (on_match) on_match(di, best_gt);
            }
        }
        tp.push_back(is_tp ? 1 : 0);
    }
    return tp;
}

}  // namespace

PRCurve match_and_curve(const std::vector<Detection>& dets, const std::vector<GtObject>& gts,
                        int category, const IouFn& iou_fn, double threshold) {
    const std::vector<char> tp = greedy_match(dets, gts, category, iou_fn, threshold);
    return curve_from_flags(tp, count_gts(gts, category));
}

double ap3d(const std::vector<Detection>& dets, const std::vector<GtObject>& gts, int category,
            double threshold) {
    return match_and_curve(dets, gts, category,
                           [](const Detection& d, const GtObject& g) { return iou3d(d.box, g.box); },
                           threshold)
        .ap;
}

double ap2d(const std::vector<Detection>& dets, const std::vector<GtObject>& gts, int category) {
    const auto iou = [](const Detection& d, const GtObject& g) { return iou2d(d.box2d, g.box2d); };
    double sum = 0.0;
    for (int k = 1; k <= 19; ++k)
        sum += match_and_curve(dets, gts, category, iou, static_cast<double>(k) * 0.05).ap;
    return sum / 19.0;
}

double ap_depth(const std::vector<Detection>& dets, const std::vector<GtObject>& gts, int category) {
    const auto iou = [](const Detection& d, const GtObject& g) { return iou2d(d.box2d, g.box2d); };
    const std::size_t num_gt = count_gts(gts, category);
    double sum = 0.0;
    for (int x = 1; x <= 20; ++x) {
        const auto eligible = [x](const Detection& d, const GtObject& g) {
            return iou2d(d.box2d, g.box2d) > 0.7 &&
                   std::abs(d.box.center.z() - g.box.center.z()) <= static_cast<double>(x);
        };
        const std::vector<char> tp = greedy_match(dets, gts, category, iou, 0.0, eligible);
        sum += curve_from_flags(tp, num_gt).ap;
    }
    return sum / 20.0;
}

double ap_3dp(const std::vector<Detection>& dets, const std::vector<GtObject>& gts, int category) {
    const auto iou = [](const Detection& d, const GtObject& g) { return iou2d(d.box2d, g.box2d); };
    const auto eligible = [](const Detection& d, const GtObject& g) {
        return iou2d(d.box2d, g.box2d) > 0.7;
    };
    std::vector<Detection> adjusted = dets;
    greedy_match(dets, gts, category, iou, 0.0, eligible,
                 [&](std::size_t di, std::size_t gi) {
                     Detection& d = adjusted[di];
                     const double z_pred = d.box.center.z();
                     if (z_pred > 0.0) d.box.center *= gts[gi].box.center.z() / z_pred;
                 });
    return ap3d(adjusted, gts, category, 0.5);
}

}  // namespace groundmix
