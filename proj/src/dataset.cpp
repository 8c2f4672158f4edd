#include "groundmix/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "groundmix/plane.hpp"
#include "groundmix/png_io.hpp"

namespace groundmix {

using json = nlohmann::ordered_json;

Box3D AnnotationRecord::to_box3d() const {
    Box3D b;
    b.center = center;
    b.dims = dims;
    b.rotation = rotation;
    b.category = category_id;
    b.track_id = track_id;
    b.score = score;
    return b;
}

const Category* DatasetManifest::find_category(int id) const {
    for (const Category& c : categories)
        if (c.id == id) return &c;
    return nullptr;
}

std::vector<Box3D> Sample::boxes() const {
    std::vector<Box3D> out;
    out.reserve(labels.size());
    for (const LabeledBox& l : labels) out.push_back(l.box);
    return out;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization
// ---------------------------------------------------------------------------

namespace {

Vec3 parse_vec3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw ParseError(what + ": expected array of 3 numbers");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Mat3 parse_mat3_nested(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw ParseError(what + ": expected 3x3 nested array");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        const Vec3 row = parse_vec3(j[r], what);
        m.row(r) = row.transpose();
    }
    return m;
}

Mat3 parse_mat3_flat(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 9) throw ParseError(what + ": expected 9 numbers, row-major");
    Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = j[i].get<double>();
    return m;
}

json dump_vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json dump_mat3_flat(const Mat3& m) {
    json j = json::array();
    for (int i = 0; i < 9; ++i) j.push_back(m(i / 3, i % 3));
    return j;
}

void validate_manifest(DatasetManifest& m) {
    std::vector<std::string> problems;
    auto complain = [&](const std::string& s) { problems.push_back(s); };

    std::set<int> category_ids;
    for (const Category& c : m.categories)
        if (!category_ids.insert(c.id).second) complain("duplicate category id " + std::to_string(c.id));

    std::set<std::string> image_ids;
    for (ImageRecord& img : m.images) {
        const std::string where = "image '" + img.id + "'";
        if (!image_ids.insert(img.id).second) complain("duplicate " + where);
        if (img.width <= 0 || img.height <= 0) complain(where + ": non-positive dimensions");
        if (!img.intrinsics.valid()) complain(where + ": focal lengths must be positive");
        if (img.plane && std::abs(img.plane->normal.norm() - 1.0) > 1e-9)
            complain(where + ": ground plane normal is not unit length");

        std::set<std::int64_t> frame_tracks;
        for (std::size_t a = 0; a < img.annotations.size(); ++a) {
            AnnotationRecord& ann = img.annotations[a];
            const std::string aw = where + " annotation #" + std::to_string(a);
            if (!category_ids.count(ann.category_id))
                complain(aw + ": unknown category " + std::to_string(ann.category_id));
            if (!(ann.dims.array() > 0.0).all()) complain(aw + ": dimensions must be positive");
            if (ann.center.z() <= 0.0) complain(aw + ": center depth must be positive");
            if (!ann.rotation.is_valid()) complain(aw + ": rotation is not in SO(3)");
            if (ann.score && (*ann.score < 0.0 || *ann.score > 1.0))
                complain(aw + ": score outside [0, 1]");
            if (ann.track_id && !frame_tracks.insert(*ann.track_id).second)
                complain(aw + ": duplicate track id " + std::to_string(*ann.track_id));
        }
    }

    if (!problems.empty()) {
        std::ostringstream oss;
        oss << "manifest validation failed (" << problems.size() << " problem(s)):";
        for (const std::string& p : problems) oss << "\n  - " << p;
        throw ValidationError(oss.str());
    }
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("manifest parse error: ") + e.what());
    }

    DatasetManifest m;
    try {
        m.schema_version = doc.at("schema_version").get<int>();
        if (m.schema_version != 1)
            throw ParseError("unsupported schema_version " + std::to_string(m.schema_version));
        m.split = doc.value("split", "");

        for (const json& jc : doc.at("categories"))
            m.categories.push_back(Category{jc.at("id").get<int>(), jc.at("name").get<std::string>()});

        std::map<std::string, std::size_t> index_of;
        for (const json& ji : doc.at("images")) {
            ImageRecord rec;
            rec.id = ji.at("id").get<std::string>();
            rec.file_name = ji.at("file_name").get<std::string>();
            rec.width = ji.at("width").get<int>();
            rec.height = ji.at("height").get<int>();
            rec.frame_index = ji.value("frame_index", 0);
            const Mat3 k = parse_mat3_nested(ji.at("K"), "image K");
            if (k(0, 1) != 0.0 || k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 ||
                k(2, 2) != 1.0)
                throw ParseError("image '" + rec.id + "': K must be upper-triangular with K[2][2]=1");
            rec.intrinsics = CameraIntrinsics{k(0, 0), k(1, 1), k(0, 2), k(1, 2)};
            if (ji.contains("ground_plane")) {
                const json& jp = ji.at("ground_plane");
                rec.plane = GroundPlane{parse_vec3(jp.at("normal"), "ground_plane normal"),
                                        jp.at("offset").get<double>()};
            }
            index_of[rec.id] = m.images.size();
            m.images.push_back(std::move(rec));
        }

        std::int64_t next_id = 0;
        for (const json& ja : doc.at("annotations")) {
            AnnotationRecord ann;
            const std::string image_id = ja.at("image_id").get<std::string>();
            const auto it = index_of.find(image_id);
            if (it == index_of.end())
                throw ParseError("annotation references unknown image '" + image_id + "'");
            ImageRecord& img = m.images[it->second];

            ann.id = ja.contains("id") ? ja.at("id").get<std::int64_t>() : next_id;
            next_id = std::max(next_id, ann.id + 1);
            ann.category_id = ja.at("category_id").get<int>();
            ann.center = parse_vec3(ja.at("center_cam"), "center_cam");
            ann.dims = parse_vec3(ja.at("dimensions"), "dimensions");
            ann.rotation.m = parse_mat3_flat(ja.at("R_cam"), "R_cam");
            if (ja.contains("track_id") && !ja.at("track_id").is_null())
                ann.track_id = ja.at("track_id").get<std::int64_t>();
            if (ja.contains("score") && !ja.at("score").is_null())
                ann.score = ja.at("score").get<double>();
            if (ja.contains("bbox2d") && !ja.at("bbox2d").is_null()) {
                const json& jb = ja.at("bbox2d");
                if (!jb.is_array() || jb.size() != 4) throw ParseError("bbox2d: expected 4 numbers");
                ann.bbox2d = Box2D{jb[0].get<double>(), jb[1].get<double>(), jb[2].get<double>(),
                                   jb[3].get<double>()};
            } else {
                const auto projected =
                    project_box_to_2d(ann.to_box3d(), img.intrinsics, img.width, img.height);
                ann.bbox2d = projected.value_or(Box2D{});
            }
            img.annotations.push_back(std::move(ann));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest field error: ") + e.what());
    }

    validate_manifest(m);
    return m;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    json doc;
    doc["schema_version"] = m.schema_version;
    doc["split"] = m.split;
    doc["categories"] = json::array();
    for (const Category& c : m.categories)
        doc["categories"].push_back(json{{"id", c.id}, {"name", c.name}});

    doc["images"] = json::array();
    doc["annotations"] = json::array();
    for (const ImageRecord& img : m.images) {
        json ji;
        ji["id"] = img.id;
        ji["file_name"] = img.file_name;
        ji["width"] = img.width;
        ji["height"] = img.height;
        ji["frame_index"] = img.frame_index;
        const Mat3 k = img.intrinsics.matrix();
        ji["K"] = json::array();
        for (int r = 0; r < 3; ++r) ji["K"].push_back(json::array({k(r, 0), k(r, 1), k(r, 2)}));
        if (img.plane)
            ji["ground_plane"] =
                json{{"normal", dump_vec3(img.plane->normal)}, {"offset", img.plane->offset}};
        doc["images"].push_back(std::move(ji));

        for (const AnnotationRecord& ann : img.annotations) {
            json ja;
            ja["id"] = ann.id;
            ja["image_id"] = img.id;
            ja["category_id"] = ann.category_id;
            ja["center_cam"] = dump_vec3(ann.center);
            ja["dimensions"] = dump_vec3(ann.dims);
            ja["R_cam"] = dump_mat3_flat(ann.rotation.m);
            if (ann.track_id) ja["track_id"] = *ann.track_id;
            if (ann.score) ja["score"] = *ann.score;
            ja["bbox2d"] = json::array({ann.bbox2d.x0, ann.bbox2d.y0, ann.bbox2d.x1, ann.bbox2d.y1});
            doc["annotations"].push_back(std::move(ja));
        }
    }

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << doc.dump(2) << '\n';
    if (!f) throw IoError("write failed: " + path.string());
}

Sample load_sample(const DatasetManifest& m, std::size_t index,
                   const std::filesystem::path& images_root) {
    if (index >= m.images.size()) throw ValidationError("sample index out of range");
    const ImageRecord& rec = m.images[index];
    Sample s;
    s.image = read_png(images_root / rec.file_name);
    if (s.image.width != rec.width || s.image.height != rec.height)
        throw ValidationError("image '" + rec.id + "': file dimensions do not match manifest");
    s.intrinsics = rec.intrinsics;
    s.image_id = rec.id;
    s.frame_index = rec.frame_index;
    s.plane = rec.plane;
    s.labels.reserve(rec.annotations.size());
    for (const AnnotationRecord& ann : rec.annotations)
        s.labels.push_back(LabeledBox{ann.to_box3d(), ann.bbox2d});
    return s;
}

ImageRecord record_from_sample(const Sample& s, const std::string& file_name) {
    ImageRecord rec;
    rec.id = s.image_id;
    rec.file_name = file_name;
    rec.width = s.image.width;
    rec.height = s.image.height;
    rec.frame_index = s.frame_index;
    rec.intrinsics = s.intrinsics;
    rec.plane = s.plane;
    std::int64_t next_id = 0;
    for (const LabeledBox& l : s.labels) {
        AnnotationRecord ann;
        ann.id = next_id++;
        ann.category_id = l.box.category;
        ann.center = l.box.center;
        ann.dims = l.box.dims;
        ann.rotation = l.box.rotation;
        ann.track_id = l.box.track_id;
        ann.score = l.box.score;
        ann.bbox2d = l.box2d;
        rec.annotations.push_back(std::move(ann));
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

std::uint64_t Histogram::total() const {
    std::uint64_t t = 0;
    for (std::uint64_t c : counts) t += c;
    return t;
}

void Histogram::add(double value) {
    const std::size_t regular = counts.size() - (has_overflow ? 1 : 0);
    double idx = std::floor((value - lo) / bin_width);
    if (idx < 0.0) idx = 0.0;
    std::size_t i = static_cast<std::size_t>(idx);
    if (i >= regular) {
        if (!has_overflow) {
            i = regular - 1;  // clamp the top edge into the last bin
        } else {
            i = counts.size() - 1;
        }
    }
    ++counts[i];
}

namespace {

Histogram make_histogram(double lo, double width, std::size_t bins, bool overflow) {
    Histogram h;
    h.lo = lo;
    h.bin_width = width;
    h.has_overflow = overflow;
    h.counts.assign(bins + (overflow ? 1 : 0), 0);
    return h;
}

/// Signed heading angle of a box within the plane's tangent basis.
double heading_angle(const Box3D& box, const GroundPlane& plane) {
    const Vec3 n = plane.normal;
    Vec3 t1 = Vec3::UnitZ() - Vec3::UnitZ().dot(n) * n;
    if (t1.norm() <= 1e-9) t1 = Vec3::UnitX() - Vec3::UnitX().dot(n) * n;
    t1.normalize();
    const Vec3 t2 = n.cross(t1);
    const Vec3 heading = box.rotation.col(2);
    const double u = heading.dot(t1);
    const double v = heading.dot(t2);
    if (std::abs(u) < 1e-12 && std::abs(v) < 1e-12) return 0.0;  // heading along the normal
    return std::atan2(v, u);
}

}  // namespace

DatasetStats compute_stats(const DatasetManifest& m, PlaneSource source, bool include_rotation) {
    DatasetStats st;
    st.depth = make_histogram(0.0, 5.0, 40, true);
    st.rotation = make_histogram(-M_PI, 2.0 * M_PI / 36.0, 36, false);
    st.dim_w = make_histogram(0.0, 0.5, 50, true);
    st.dim_h = make_histogram(0.0, 0.5, 50, true);
    st.dim_l = make_histogram(0.0, 0.5, 50, true);
    st.rotation_included = include_rotation;

    for (const ImageRecord& img : m.images) {
        std::optional<GroundPlane> plane;
        if (include_rotation) {
            if (source != PlaneSource::fit_from_boxes && img.plane) plane = img.plane;
            if (!plane && source != PlaneSource::stored) {
                std::vector<Vec3> pts;
                for (const AnnotationRecord& ann : img.annotations)
                    pts.push_back(bottom_center(ann.to_box3d()));
                try {
                    plane = fit_ground_plane(pts);
                } catch (const Error&) {
                }
            }
            if (!plane && !img.annotations.empty())
                throw MissingPlane("image '" + img.id + "': no ground plane for rotation stats");
        }
        for (const AnnotationRecord& ann : img.annotations) {
            st.depth.add(ann.center.z());
            st.dim_w.add(ann.dims.x());
            st.dim_h.add(ann.dims.y());
            st.dim_l.add(ann.dims.z());
            ++st.category_counts[ann.category_id];
            ++st.box_count;
            if (include_rotation) st.rotation.add(heading_angle(ann.to_box3d(), *plane));
        }
    }
    return st;
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << "lower_edge,count\n";
    char buf[64];
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", h.lo + static_cast<double>(i) * h.bin_width);
        f << buf << ',' << h.counts[i] << '\n';
    }
    if (!f) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

const std::array<Color, 8> kPalette = {{{230, 60, 60},
                                        {60, 200, 60},
                                        {70, 110, 240},
                                        {230, 200, 40},
                                        {200, 70, 220},
                                        {50, 210, 210},
                                        {240, 140, 40},
                                        {160, 160, 160}}};

}  // namespace

Image render_overlay_image(const Sample& s) {
    Image out = s.image;
    for (const LabeledBox& l : s.labels) {
        const Color c = kPalette[static_cast<std::size_t>(l.box.category & 7)];
        const Color dim{static_cast<std::uint8_t>(c.r / 2), static_cast<std::uint8_t>(c.g / 2),
                        static_cast<std::uint8_t>(c.b / 2)};
        draw_rect_outline(out, l.box2d, dim);

        const auto corners = box_corners(l.box);
        std::array<std::optional<Vec2>, 8> px;
        for (int i = 0; i < 8; ++i)
            if (corners[i].z() > 0.0) px[i] = project(s.intrinsics, corners[i]);
        for (const auto& [a, b] : kBoxEdges) {
            if (!px[a] || !px[b]) continue;
            draw_line(out, static_cast<int>(std::lround(px[a]->x())),
                      static_cast<int>(std::lround(px[a]->y())),
                      static_cast<int>(std::lround(px[b]->x())),
                      static_cast<int>(std::lround(px[b]->y())), c);
        }
    }
    return out;
}

void render_overlay(const Sample& s, const std::filesystem::path& out_path) {
    write_png(render_overlay_image(s), out_path);
}

}  // namespace groundmix
