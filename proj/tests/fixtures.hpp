#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "groundmix/dataset.hpp"
#include "groundmix/geometry.hpp"
#include "groundmix/image.hpp"
#include "groundmix/rng.hpp"

namespace fixtures {

using namespace groundmix;

/// Deterministic background: a diagonal gradient salted by `tag`.
Image make_background(int w, int h, std::uint64_t tag);

/// Rotation sampled by orthonormalizing random triples (redrawn when nearly
/// degenerate). Not Haar-uniform; adequate for property tests.
Rotation3 random_rotation(Rng& rng);

/// Box resting on the horizontal plane y = plane_d (normal (0,1,0)) with its
/// bottom-face center at (x, plane_d, z); yaw is about the camera y-axis.
Box3D grounded_box(double x, double z, const Vec3& dims, double plane_d, double yaw, int category);

struct SceneSpec {
    int width = 320;
    int height = 240;
    double f = 707.05;
    double plane_d = 2.0;
    double cy = -1.0;  ///< principal point y; negative means height / 2
    std::uint64_t background_tag = 1;
};

/// Renders boxes as filled category-colored rectangles over the background
/// and assembles the labels (2D boxes from projection). Boxes that do not
/// project into the image are skipped.
Sample make_scene(const SceneSpec& spec, const std::vector<Box3D>& boxes, const std::string& id);

/// A small multi-object scene on the default plane.
Sample default_scene(const std::string& id, std::uint64_t tag = 1);

/// Scene tuned for patch pasting: wide ground coverage (principal point near
/// the top) and near-field objects, so most target draws land on the plane
/// with scales below the magnification bound.
Sample paste_scene(const std::string& id, std::uint64_t tag = 1);

/// Companion target: three boxes at the image periphery leave room for
/// pasted patches.
Sample paste_target_scene(const std::string& id, std::uint64_t tag = 1);

/// Writes samples as a dataset (manifest.json + images/) under dir and
/// returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir,
                                    const std::vector<Sample>& samples,
                                    const std::string& split = "test");

/// Fresh scratch directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace fixtures
