#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "groundmix/geometry.hpp"
#include "groundmix/image.hpp"

namespace groundmix {

struct Category {
    int id = 0;
    std::string name;
};

/// One annotated object as stored in the manifest. The 2D box is recomputed
/// from the 3D box at load time when the file omits it.
struct AnnotationRecord {
    std::int64_t id = 0;
    int category_id = 0;
    Vec3 center = Vec3::Zero();    ///< camera frame, meters
    Vec3 dims = Vec3::Zero();      ///< (w, h, l)
    Rotation3 rotation;            ///< egocentric
    std::optional<std::int64_t> track_id;
    std::optional<double> score;
    Box2D bbox2d;

    Box3D to_box3d() const;
};

struct ImageRecord {
    std::string id;
    std::string file_name;  ///< relative to the manifest directory
    int width = 0;
    int height = 0;
    int frame_index = 0;
    CameraIntrinsics intrinsics;
    std::optional<GroundPlane> plane;
    std::vector<AnnotationRecord> annotations;
};

/// One split of a dataset: categories, per-image intrinsics and annotations.
/// JSON layout (schema_version 1) documented in the README.
struct DatasetManifest {
    int schema_version = 1;
    std::string split;
    std::vector<Category> categories;
    std::vector<ImageRecord> images;

    const Category* find_category(int id) const;
};

/// A decoded training sample: pixels plus labels.
struct LabeledBox {
    Box3D box;
    Box2D box2d;
};

struct Sample {
    Image image;
    CameraIntrinsics intrinsics;
    std::vector<LabeledBox> labels;
    std::string image_id;
    int frame_index = 0;
    std::optional<GroundPlane> plane;

    std::vector<Box3D> boxes() const;
};

/// Parses and validates a manifest. Missing 2D boxes are recomputed by
/// projecting the 3D corners. Throws ParseError (malformed JSON / wrong
/// types, with position info) or ValidationError (invariant violations,
/// listing the offending records).
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Writes the manifest as deterministic, round-trippable JSON.
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

/// Loads the image referenced by images[index] and assembles a Sample.
Sample load_sample(const DatasetManifest& m, std::size_t index,
                   const std::filesystem::path& images_root);

/// Builds the manifest record for an (augmented) sample.
ImageRecord record_from_sample(const Sample& s, const std::string& file_name);

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct Histogram {
    double lo = 0.0;
    double bin_width = 1.0;
    bool has_overflow = false;  ///< when set, the last count collects values >= top edge
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const;
    void add(double value);
};

struct DatasetStats {
    Histogram depth;       ///< box center z; 5 m bins over [0, 200] plus overflow
    Histogram rotation;    ///< heading angle vs. ground tangent; 36 bins over [-pi, pi]
    Histogram dim_w, dim_h, dim_l;  ///< 0.5 m bins over [0, 25] plus overflow
    std::map<int, std::uint64_t> category_counts;
    std::uint64_t box_count = 0;
    bool rotation_included = false;
};

enum class PlaneSource {
    stored,         ///< use the per-image plane from the manifest only
    fit_from_boxes, ///< always fit from bottom centers
    stored_or_fit,  ///< prefer stored, fit when absent
};

/// Aggregates histograms over all annotations. When include_rotation is set,
/// every image needs a ground plane per `source`; otherwise MissingPlane is
/// thrown naming the image. The heading angle is the signed angle of the box
/// z-axis projected into the plane's tangent basis (t1 = camera forward
/// projected onto the plane, t2 = n x t1).
DatasetStats compute_stats(const DatasetManifest& m, PlaneSource source = PlaneSource::stored_or_fit,
                           bool include_rotation = true);

/// "lower_edge,count" rows, one per bin (overflow row uses the top edge).
void write_histogram_csv(const Histogram& h, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Draws projected 3D wireframes and 2D boxes over a copy of the sample image.
Image render_overlay_image(const Sample& s);

/// render_overlay_image + deterministic PNG encoding.
void render_overlay(const Sample& s, const std::filesystem::path& out_path);

}  // namespace groundmix
