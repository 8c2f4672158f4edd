#include "groundmix/augment.hpp"

#include <algorithm>
#include <cmath>

#include "groundmix/plane.hpp"

namespace groundmix {

// ---------------------------------------------------------------------------
// Virtual depth
// ---------------------------------------------------------------------------

namespace {

void require_positive(std::initializer_list<double> values, const char* what) {
    for (double v : values)
        if (!(v > 0.0)) throw NonPositiveArgument(std::string(what) + ": arguments must be > 0");
}

GroundPlane with_sign_convention(GroundPlane p) {
    const Vec3& n = p.normal;
    const bool flip =
        n.y() < 0.0 || (n.y() == 0.0 && (n.z() < 0.0 || (n.z() == 0.0 && n.x() < 0.0)));
    if (flip) {
        p.normal = -p.normal;
        p.offset = -p.offset;
    }
    return p;
}

}  // namespace

double to_virtual_depth(double z, double f_img, double h_img, double h_aug, double f_ref) {
    require_positive({z, f_img, h_img, h_aug, f_ref}, "to_virtual_depth");
    return h_img / h_aug * (f_ref / f_img) * z;
}

double from_virtual_depth(double z_virtual, double f_img, double h_img, double h_aug, double f_ref) {
    require_positive({z_virtual, f_img, h_img, h_aug, f_ref}, "from_virtual_depth");
    return h_aug / h_img * (f_img / f_ref) * z_virtual;
}

double patch_scale(double z_p, double f_p, double z_t, double f_t) {
    require_positive({z_p, f_p, z_t, f_t}, "patch_scale");
    return z_p / f_p * (f_t / z_t);
}

// ---------------------------------------------------------------------------
// Scale augmentation
// ---------------------------------------------------------------------------

Sample scale_augment(const Sample& s, int target_height, const AugmentConfig& cfg) {
    if (target_height <= 0) throw NonPositiveArgument("scale_augment: target height must be > 0");

    const double sy = static_cast<double>(target_height) / s.image.height;
    const int target_width = std::max(1, static_cast<int>(std::lround(s.image.width * sy)));
    const double sx = static_cast<double>(target_width) / s.image.width;

    Sample out;
    out.image = resize_bilinear(s.image, target_width, target_height);
    out.intrinsics = CameraIntrinsics{s.intrinsics.fx * sx, s.intrinsics.fy * sy,
                                      s.intrinsics.cx * sx, s.intrinsics.cy * sy};
    out.image_id = s.image_id;
    out.frame_index = s.frame_index;

    // each center is stretched along its camera ray onto the virtual depth;
    // the factor is shared by all boxes of the sample
    const double virt = to_virtual_depth(1.0, s.intrinsics.fy, static_cast<double>(s.image.height),
                                         static_cast<double>(target_height), cfg.f_ref);
    out.labels.reserve(s.labels.size());
    for (const LabeledBox& l : s.labels) {
        LabeledBox nl = l;
        nl.box.center = l.box.center * virt;
        nl.box2d = Box2D{l.box2d.x0 * sx, l.box2d.y0 * sy, l.box2d.x1 * sx, l.box2d.y1 * sy};
        out.labels.push_back(std::move(nl));
    }
    if (s.plane) out.plane = GroundPlane{s.plane->normal, s.plane->offset * virt};
    return out;
}

// ---------------------------------------------------------------------------
// Rotation augmentation
// ---------------------------------------------------------------------------

Sample rotate_augment(const Sample& s, double phi, const Vec2& pivot) {
    Sample out;
    out.image = rotate_bilinear(s.image, phi, pivot);
    out.intrinsics = s.intrinsics;
    out.image_id = s.image_id;
    out.frame_index = s.frame_index;

    const Rotation3 r_phi = Rotation3::about_z(phi);
    const double w = static_cast<double>(s.image.width);
    const double h = static_cast<double>(s.image.height);

    for (const LabeledBox& l : s.labels) {
        if (l.box.center.z() <= 0.0) continue;
        const Vec2 px = rotate_pixel(project(s.intrinsics, l.box.center), phi, pivot);
        if (!(px.x() >= 0.0 && px.x() <= w && px.y() >= 0.0 && px.y() <= h)) continue;

        LabeledBox nl = l;
        nl.box.rotation = r_phi * l.box.rotation;
        nl.box.center = unproject_depth(s.intrinsics, px, l.box.center.z());

        const auto reprojected = project_box_to_2d(nl.box, s.intrinsics, s.image.width, s.image.height);
        if (!reprojected) continue;

        // hull of the rotated original 2D box
        Box2D hull{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (const Vec2& corner : {Vec2(l.box2d.x0, l.box2d.y0), Vec2(l.box2d.x1, l.box2d.y0),
                                   Vec2(l.box2d.x0, l.box2d.y1), Vec2(l.box2d.x1, l.box2d.y1)}) {
            const Vec2 rc = rotate_pixel(corner, phi, pivot);
            hull.x0 = std::min(hull.x0, rc.x());
            hull.y0 = std::min(hull.y0, rc.y());
            hull.x1 = std::max(hull.x1, rc.x());
            hull.y1 = std::max(hull.y1, rc.y());
        }
        const Box2D tight = intersect(hull, *reprojected);
        if (tight.empty()) continue;
        nl.box2d = tight;
        out.labels.push_back(std::move(nl));
    }

    if (s.plane)
        out.plane = with_sign_convention(GroundPlane{r_phi * s.plane->normal, s.plane->offset});
    return out;
}

// ---------------------------------------------------------------------------
// MixUp
// ---------------------------------------------------------------------------

Sample mixup(const Sample& a, const Sample& b) {
    Sample bb = b;
    if (b.image.width != a.image.width || b.image.height != a.image.height) {
        const double sx = static_cast<double>(a.image.width) / b.image.width;
        const double sy = static_cast<double>(a.image.height) / b.image.height;
        bb.image = resize_bilinear(b.image, a.image.width, a.image.height);
        bb.intrinsics = CameraIntrinsics{b.intrinsics.fx * sx, b.intrinsics.fy * sy,
                                         b.intrinsics.cx * sx, b.intrinsics.cy * sy};
        for (LabeledBox& l : bb.labels)
            l.box2d = Box2D{l.box2d.x0 * sx, l.box2d.y0 * sy, l.box2d.x1 * sx, l.box2d.y1 * sy};
    }
    const auto close = [](double x, double y) { return std::abs(x - y) <= 1e-6; };
    if (!close(a.intrinsics.fx, bb.intrinsics.fx) || !close(a.intrinsics.fy, bb.intrinsics.fy) ||
        !close(a.intrinsics.cx, bb.intrinsics.cx) || !close(a.intrinsics.cy, bb.intrinsics.cy))
        throw GeometryMismatch("mixup: intrinsics differ after alignment");

    Sample out;
    out.image = average(a.image, bb.image);
    out.intrinsics = a.intrinsics;
    out.image_id = a.image_id;
    out.frame_index = a.frame_index;
    out.plane = a.plane;
    out.labels = a.labels;
    // partner tracks belong to another sequence; dropping the ids keeps
    // track uniqueness within the blended frame
    for (LabeledBox l : bb.labels) {
        l.box.track_id.reset();
        out.labels.push_back(std::move(l));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Soft mask
// ---------------------------------------------------------------------------

SoftMaskParams draw_soft_mask_params(int width, int height, Rng& rng) {
    SoftMaskParams p;
    const double dims[4] = {static_cast<double>(width), static_cast<double>(width),
                            static_cast<double>(height), static_cast<double>(height)};
    for (int i = 0; i < 4; ++i) p.crop[i] = rng.uniform(0.0, 0.1 * dims[i]);
    for (int i = 0; i < 4; ++i) p.blend[i] = rng.uniform(0.0, 0.2 * dims[i]);
    p.center_opacity = rng.uniform(0.8, 1.0);
    return p;
}

OpacityMask make_soft_mask(int width, int height, const SoftMaskParams& params) {
    if (width < 1 || height < 1) throw DegenerateDims("make_soft_mask: empty mask");
    OpacityMask mask(width, height);

    // edge profile: 0 through the crop band, linear 0 -> 1 across the blend
    // band (a step when the blend band is empty), 1 beyond
    const auto profile = [](double depth, double crop, double blend) {
        if (depth <= crop) return 0.0;
        if (blend <= 0.0) return 1.0;
        return std::min(1.0, (depth - crop) / blend);
    };

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dl = x + 0.5;
            const double dr = width - x - 0.5;
            const double dt = y + 0.5;
            const double db = height - y - 0.5;
            const double p = std::min(std::min(profile(dl, params.crop[0], params.blend[0]),
                                               profile(dr, params.crop[1], params.blend[1])),
                                      std::min(profile(dt, params.crop[2], params.blend[2]),
                                               profile(db, params.crop[3], params.blend[3])));
            mask.at(x, y) = params.center_opacity * p;
        }
    }
    return mask;
}

OpacityMask make_soft_mask(int width, int height, Rng& rng) {
    return make_soft_mask(width, height, draw_soft_mask_params(width, height, rng));
}

// ---------------------------------------------------------------------------
// Ground-plane pasting
// ---------------------------------------------------------------------------

namespace {

/// Offset from box center to its ground-contact face center; matches the
/// sign rule of bottom_center so pasted boxes invert exactly.
Vec3 bottom_offset(const Box3D& b) {
    const Vec3 half = b.rotation * Vec3(0.0, 0.5 * b.dims.y(), 0.0);
    return half.y() >= 0.0 ? half : Vec3(-half);
}

/// Overlap fraction relative to the smaller box.
double overlap_fraction(const Box2D& a, const Box2D& b) {
    const double denom = std::min(a.area(), b.area());
    if (denom <= 0.0) return 0.0;
    return intersection_area(a, b) / denom;
}

}  // namespace

Sample ground_mix(const Sample& s, const GroundPlane& plane, const PatchBank& bank,
                  const AugmentConfig& cfg, Rng& rng, GroundMixLog* log) {
    GroundMixLog local;
    GroundMixLog& lg = log ? *log : local;
    Sample out = s;
    if (bank.empty()) return out;

    std::vector<Box2D> occupied;
    occupied.reserve(out.labels.size() + static_cast<std::size_t>(cfg.max_pastes));
    for (const LabeledBox& l : out.labels) occupied.push_back(l.box2d);

    const double w = static_cast<double>(s.image.width);
    const double h = static_cast<double>(s.image.height);
    const double f_t = s.intrinsics.fy;

    for (int it = 0; it < cfg.max_pastes; ++it) {
        ++lg.attempts;
        const Vec2 target_px(rng.uniform(0.0, w), rng.uniform(0.0, h));
        const auto plane_point = try_unproject_to_plane(s.intrinsics, target_px, plane);
        if (!plane_point) {
            ++lg.skipped_unproject;
            continue;
        }
        const double z_t = plane_point->z();

        const Patch patch = bank.sample_hard_patches(rng, 1).front();
        const double scale = patch_scale(patch.source_depth, patch.source_focal, z_t, f_t);
        if (scale > cfg.s_max) {
            ++lg.skipped_scale;
            continue;
        }

        const int pw = std::max(1, static_cast<int>(std::lround(patch.pixels.width * scale)));
        const int ph = std::max(1, static_cast<int>(std::lround(patch.pixels.height * scale)));
        const int left = static_cast<int>(std::lround(target_px.x() - patch.rel_bottom.x() * pw));
        const int top = static_cast<int>(std::lround(target_px.y() - patch.rel_bottom.y() * ph));
        if (left < 0 || top < 0 || left + pw > s.image.width || top + ph > s.image.height) {
            ++lg.skipped_bounds;
            continue;
        }
        const Box2D footprint{static_cast<double>(left), static_cast<double>(top),
                              static_cast<double>(left + pw), static_cast<double>(top + ph)};

        bool blocked = false;
        for (const Box2D& b : occupied)
            if (overlap_fraction(footprint, b) > cfg.intrusion_threshold) {
                blocked = true;
                break;
            }
        if (blocked) {
            ++lg.skipped_overlap;
            continue;
        }

        Box3D nb;
        nb.dims = patch.label.dims;
        nb.rotation = patch.label.rotation;  // source orientation kept as-is
        nb.category = patch.label.category;
        nb.center = *plane_point - bottom_offset(nb);
        if (nb.center.z() <= 0.0) {
            ++lg.skipped_bounds;
            continue;
        }
        const Vec2 cpx = project(s.intrinsics, nb.center);
        if (!(cpx.x() >= 0.0 && cpx.x() <= w && cpx.y() >= 0.0 && cpx.y() <= h)) {
            ++lg.skipped_bounds;
            continue;
        }

        const Image resized = resize_bilinear(patch.pixels, pw, ph);
        const OpacityMask mask = make_soft_mask(pw, ph, rng);
        composite(out.image, resized, mask, left, top);
        out.labels.push_back(LabeledBox{nb, footprint});
        occupied.push_back(footprint);
        ++lg.pasted;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Whole-sample pipeline
// ---------------------------------------------------------------------------

namespace {

/// Plane used for pasting: the stored one when present, else a fresh fit.
std::optional<GroundPlane> paste_plane(const Sample& s) {
    if (!should_apply_groundmix(s.boxes())) return std::nullopt;
    if (s.plane) return s.plane;
    std::vector<Vec3> pts;
    pts.reserve(s.labels.size());
    for (const LabeledBox& l : s.labels) pts.push_back(bottom_center(l.box));
    return fit_ground_plane(pts);
}

}  // namespace

Sample augment_sample(const Sample& s, const PatchBank& bank, const AugmentConfig& cfg,
                      const PartnerSource& partners, Rng& rng, SampleAugmentLog* log) {
    SampleAugmentLog local;
    SampleAugmentLog& lg = log ? *log : local;

    Sample cur = s;
    if (!bank.empty()) {
        if (const auto plane = paste_plane(cur)) {
            cur = ground_mix(cur, *plane, bank, cfg, rng, &lg.ground_mix);
            lg.ground_mix_applied = true;
        }
    }

    // scaling always runs so depth targets are uniformly virtual; the coin
    // only decides whether the raster size changes
    double factor = 1.0;
    if (rng.bernoulli(cfg.scale_prob)) {
        factor = rng.uniform(cfg.scale_min, cfg.scale_max);
        lg.scaled = true;
    }
    const int target_height = std::max(1, static_cast<int>(std::lround(cur.image.height * factor)));
    lg.target_height = target_height;
    cur = scale_augment(cur, target_height, cfg);

    if (cfg.rotation_enabled && rng.bernoulli(cfg.rotation_prob)) {
        const double phi = rng.uniform(cfg.rotation_min, cfg.rotation_max);
        const double w = static_cast<double>(cur.image.width);
        const double h = static_cast<double>(cur.image.height);
        const Vec2 pivot(rng.uniform(0.375 * w, 0.625 * w), rng.uniform(0.375 * h, 0.625 * h));
        cur = rotate_augment(cur, phi, pivot);
        lg.rotated = true;
        lg.phi = phi;
        lg.pivot = pivot;
    }

    if (partners.count > 0 && rng.bernoulli(cfg.mixup_prob)) {
        Sample partner = partners.load(rng.uniform_index(partners.count));
        lg.partner_id = partner.image_id;
        if (!bank.empty()) {
            if (const auto plane = paste_plane(partner))
                partner = ground_mix(partner, *plane, bank, cfg, rng, nullptr);
        }
        partner = scale_augment(partner, cur.image.height, cfg);
        if (partner.image.width != cur.image.width) {
            lg.mixup_skipped_mismatch = true;
        } else {
            try {
                cur = mixup(cur, partner);
                lg.mixed = true;
            } catch (const GeometryMismatch&) {
                lg.mixup_skipped_mismatch = true;
            }
        }
    }
    return cur;
}

}  // namespace groundmix
