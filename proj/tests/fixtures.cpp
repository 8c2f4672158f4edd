#include "fixtures.hpp"

#include <cmath>

#include "groundmix/png_io.hpp"

namespace fixtures {

Image make_background(int w, int h, std::uint64_t tag) {
    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t* p = img.px(x, y);
            p[0] = static_cast<std::uint8_t>((x * 13 + y * 7 + tag * 31) & 0xff);
            p[1] = static_cast<std::uint8_t>((x * 5 + y * 11 + tag * 17) & 0xff);
            p[2] = static_cast<std::uint8_t>((x + 2 * y + tag * 101) & 0xff);
        }
    }
    return img;
}

Rotation3 random_rotation(Rng& rng) {
    for (;;) {
        std::array<double, 6> v{};
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        try {
            return gram_schmidt_rotation(v);
        } catch (const DegenerateInput&) {
        }
    }
}

Box3D grounded_box(double x, double z, const Vec3& dims, double plane_d, double yaw, int category) {
    Box3D b;
    b.dims = dims;
    b.rotation = Rotation3::from_axis_angle(Vec3::UnitY(), yaw);
    b.center = Vec3(x, plane_d - 0.5 * dims.y(), z);
    b.category = category;
    return b;
}

namespace {

const std::array<Color, 4> kFillColors = {{{200, 40, 40}, {40, 170, 40}, {40, 80, 210}, {210, 190, 40}}};

}  // namespace

Sample make_scene(const SceneSpec& spec, const std::vector<Box3D>& boxes, const std::string& id) {
    Sample s;
    s.image = make_background(spec.width, spec.height, spec.background_tag);
    const double cy = spec.cy >= 0.0 ? spec.cy : spec.height / 2.0;
    s.intrinsics = CameraIntrinsics{spec.f, spec.f, spec.width / 2.0, cy};
    s.image_id = id;
    s.plane = GroundPlane{Vec3(0.0, 1.0, 0.0), spec.plane_d};
    std::int64_t track = 0;
    for (Box3D b : boxes) {
        const auto box2d = project_box_to_2d(b, s.intrinsics, spec.width, spec.height);
        if (!box2d) continue;
        b.track_id = track++;
        fill_rect(s.image, *box2d, kFillColors[static_cast<std::size_t>(b.category) % 4]);
        s.labels.push_back(LabeledBox{b, *box2d});
    }
    return s;
}

Sample default_scene(const std::string& id, std::uint64_t tag) {
    SceneSpec spec;
    spec.background_tag = tag;
    const Vec3 car(1.8, 1.5, 4.2);
    const Vec3 truck(2.5, 3.0, 8.0);
    return make_scene(spec,
                      {
                          grounded_box(-4.0, 28.0, car, spec.plane_d, 0.3, 0),
                          grounded_box(0.5, 40.0, truck, spec.plane_d, -0.7, 1),
                          grounded_box(4.0, 24.0, car, spec.plane_d, 1.2, 0),
                          grounded_box(-1.5, 55.0, car, spec.plane_d, 2.2, 0),
                      },
                      id);
}

Sample paste_scene(const std::string& id, std::uint64_t tag) {
    SceneSpec spec;
    spec.width = 640;
    spec.height = 360;
    spec.f = 400.0;
    spec.cy = 80.0;
    spec.background_tag = tag;
    const Vec3 car(1.8, 1.5, 4.2);
    return make_scene(spec,
                      {
                          grounded_box(-4.5, 7.0, car, spec.plane_d, 0.2, 0),
                          grounded_box(4.5, 9.0, car, spec.plane_d, -0.4, 0),
                          grounded_box(0.5, 14.0, car, spec.plane_d, 1.1, 1),
                          grounded_box(-2.5, 20.0, car, spec.plane_d, 2.0, 0),
                      },
                      id);
}

Sample paste_target_scene(const std::string& id, std::uint64_t tag) {
    SceneSpec spec;
    spec.width = 640;
    spec.height = 360;
    spec.f = 400.0;
    spec.cy = 80.0;
    spec.background_tag = tag;
    const Vec3 car(1.8, 1.5, 4.2);
    return make_scene(spec,
                      {
                          grounded_box(-10.0, 28.0, car, spec.plane_d, 0.1, 0),
                          grounded_box(10.0, 28.0, car, spec.plane_d, -0.3, 0),
                          grounded_box(0.0, 44.0, car, spec.plane_d, 1.4, 1),
                      },
                      id);
}

std::filesystem::path write_dataset(const std::filesystem::path& dir,
                                    const std::vector<Sample>& samples, const std::string& split) {
    std::filesystem::create_directories(dir / "images");
    DatasetManifest m;
    m.split = split;
    m.categories = {{0, "car"}, {1, "truck"}};
    for (const Sample& s : samples) {
        const std::string file_name = "images/" + s.image_id + ".png";
        write_png(s.image, dir / file_name);
        m.images.push_back(record_from_sample(s, file_name));
    }
    const std::filesystem::path path = dir / "manifest.json";
    save_manifest(m, path);
    return path;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("groundmix_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixtures
