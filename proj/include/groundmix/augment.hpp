#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "groundmix/dataset.hpp"
#include "groundmix/geometry.hpp"
#include "groundmix/image.hpp"
#include "groundmix/patchbank.hpp"
#include "groundmix/rng.hpp"

namespace groundmix {

struct AugmentConfig {
    double f_ref = 707.05;  ///< reference focal length for the virtual depth
    double s_max = 2.0;     ///< patches needing more magnification are skipped
    int max_pastes = 6;     ///< paste attempts per image
    double mixup_prob = 0.5;
    double scale_prob = 0.5;
    bool rotation_enabled = false;  ///< in-plane rotation pays off on drone-style data only
    double rotation_prob = 0.5;
    double rotation_min = -M_PI;
    double rotation_max = M_PI;
    double scale_min = 0.7;  ///< resize-factor range for scale augmentation
    double scale_max = 1.3;
    double intrusion_threshold = 0.35;  ///< reused for paste placement
};

// ---------------------------------------------------------------------------
// Virtual depth
// ---------------------------------------------------------------------------

/// Depth as seen by a virtual camera with focal f_ref rendering the image
/// resized from height h_img to h_aug: z * (h_img / h_aug) * (f_ref / f_img).
/// All arguments must be positive (NonPositiveArgument).
double to_virtual_depth(double z, double f_img, double h_img, double h_aug, double f_ref);

/// Inverse of to_virtual_depth (exact round trip up to rounding).
double from_virtual_depth(double z_virtual, double f_img, double h_img, double h_aug, double f_ref);

/// Magnification needed to move a patch from (z_p, f_p) to (z_t, f_t):
/// (z_p / f_p) * (f_t / z_t). Callers skip pastes with s > s_max.
double patch_scale(double z_p, double f_p, double z_t, double f_t);

// ---------------------------------------------------------------------------
// Geometric transforms
// ---------------------------------------------------------------------------

/// Resizes the image to target_height (aspect preserved, width rounded),
/// scales intrinsics and 2D boxes accordingly and rewrites label centers to
/// the virtual-depth parameterization: each center is multiplied by
/// z_virtual / z, which keeps its projection under the scaled intrinsics on
/// the scaled pixel. The stored plane offset is scaled by the same factor.
Sample scale_augment(const Sample& s, int target_height, const AugmentConfig& cfg);

/// Rotates the image by phi (radians) about pivot and updates labels:
/// rotations are left-multiplied by the in-plane rotation about the camera
/// z-axis; centers are re-projected (project -> rotate pixel -> unproject at
/// the original depth); the 2D box becomes the intersection of the rotated
/// original 2D box's hull with the reprojected 3D box. Boxes whose center
/// pixel leaves the image are dropped.
Sample rotate_augment(const Sample& s, double phi, const Vec2& pivot);

/// Pixel-wise average of two samples plus label concatenation. b is first
/// resampled to a's raster (per-axis bilinear resize with intrinsics and 2D
/// boxes scaled); if the aligned intrinsics still differ beyond 1e-6,
/// GeometryMismatch is thrown. Track ids of b's labels are cleared, since
/// they refer to another sequence.
Sample mixup(const Sample& a, const Sample& b);

// ---------------------------------------------------------------------------
// Soft pasting
// ---------------------------------------------------------------------------

/// Random draws behind make_soft_mask, exposed so tests can pin them.
/// crop[i] / blend[i] are band widths in pixels for sides
/// {left, right, top, bottom}; center_opacity is the plateau level.
struct SoftMaskParams {
    std::array<double, 4> crop{};
    std::array<double, 4> blend{};
    double center_opacity = 1.0;
};

/// Draws, per side, a crop band width in [0, 0.1 * side length] and a blend
/// band width in [0, 0.2 * side length], plus a center opacity in [0.8, 1.0].
/// Draw order: crop l,r,t,b; blend l,r,t,b; center.
SoftMaskParams draw_soft_mask_params(int width, int height, Rng& rng);

/// Three-band opacity: 0 inside the crop band, a linear ramp up across the
/// blend band, and the center plateau elsewhere. Opacity is the per-side
/// minimum of the four edge profiles times the plateau level, evaluated at
/// pixel centers. Throws DegenerateDims for empty masks.
OpacityMask make_soft_mask(int width, int height, const SoftMaskParams& params);
OpacityMask make_soft_mask(int width, int height, Rng& rng);

// ---------------------------------------------------------------------------
// Ground-plane pasting
// ---------------------------------------------------------------------------

struct GroundMixLog {
    int attempts = 0;
    int pasted = 0;
    int skipped_unproject = 0;
    int skipped_scale = 0;
    int skipped_bounds = 0;
    int skipped_overlap = 0;
};

/// Pastes up to cfg.max_pastes hard-mined patches onto the ground plane.
/// Per attempt: draw a target pixel uniformly, unproject it onto the plane,
/// sample a patch, scale it by patch_scale (skip if > s_max), place it so the
/// patch's recorded ground-contact point lands on the target pixel (skip if
/// the footprint leaves the image or overlaps an existing 2D box beyond the
/// intrusion threshold), blend through a fresh soft mask and append a label
/// whose bottom center is exactly the plane point. Original labels are
/// untouched; everything is deterministic given the rng state.
Sample ground_mix(const Sample& s, const GroundPlane& plane, const PatchBank& bank,
                  const AugmentConfig& cfg, Rng& rng, GroundMixLog* log = nullptr);

// ---------------------------------------------------------------------------
// Whole-sample pipeline (CLI order: paste -> scale -> rotate -> mixup)
// ---------------------------------------------------------------------------

struct SampleAugmentLog {
    bool ground_mix_applied = false;
    GroundMixLog ground_mix;
    bool scaled = false;
    int target_height = 0;
    bool rotated = false;
    double phi = 0.0;
    Vec2 pivot = Vec2::Zero();
    bool mixed = false;
    std::string partner_id;
    bool mixup_skipped_mismatch = false;
};

/// Mixup partner candidates, loaded on demand so datasets never need to be
/// resident in memory as a whole. `load(i)` must be valid for i < count and
/// must exclude the sample currently being augmented.
struct PartnerSource {
    std::size_t count = 0;
    std::function<Sample(std::size_t)> load;
};

/// Full per-sample pipeline. Patch pasting runs when the sample passes
/// should_apply_groundmix (the stored plane, if any, is preferred for the
/// paste geometry). Scaling is always routed through scale_augment so depths
/// are uniformly in virtual parameterization; the coin flip only decides
/// whether the resize factor differs from 1. Mixup draws a partner from
/// `partners`, gives it patch pasting plus the same target height, and skips
/// on geometry mismatch.
Sample augment_sample(const Sample& s, const PatchBank& bank, const AugmentConfig& cfg,
                      const PartnerSource& partners, Rng& rng, SampleAugmentLog* log = nullptr);

}  // namespace groundmix
