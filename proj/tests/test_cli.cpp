#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "groundmix/dataset.hpp"

using namespace groundmix;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

CliResult run_cli(const std::string& args, const std::filesystem::path& scratch) {
    const auto out_path = scratch / "stdout.txt";
    const auto err_path = scratch / "stderr.txt";
    const std::string cmd = std::string(GROUNDMIX_CLI_PATH) + " " + args + " > " +
                            out_path.string() + " 2> " + err_path.string();
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WEXITSTATUS(raw);
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

/// Perfect predictions straight from the manifest annotations.
void write_perfect_detections(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ofstream f(path);
    for (const ImageRecord& img : m.images) {
        for (const AnnotationRecord& ann : img.annotations) {
            f << "{\"image_id\":\"" << img.id << "\",\"category\":" << ann.category_id
              << ",\"score\":0.9,\"center_cam\":[" << ann.center.x() << ',' << ann.center.y() << ','
              << ann.center.z() << "],\"dimensions\":[" << ann.dims.x() << ',' << ann.dims.y() << ','
              << ann.dims.z() << "],\"R_cam\":[";
            for (int k = 0; k < 9; ++k) f << (k ? "," : "") << ann.rotation.m(k / 3, k % 3);
            f << "]}\n";
        }
    }
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("evaluate on ground truth returns AP 1.0 everywhere") {
    const auto dir = fixtures::scratch_dir("cli_eval");
    const auto manifest_path =
        fixtures::write_dataset(dir, {fixtures::default_scene("e0", 1), fixtures::default_scene("e1", 2)});
    const DatasetManifest m = load_manifest(manifest_path);
    write_perfect_detections(m, dir / "dets.jsonl");

    const CliResult r = run_cli("evaluate --gt " + manifest_path.string() + " --detections " +
                                    (dir / "dets.jsonl").string(),
                                dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("1.000000,1.000000,1.000000,1.000000") != std::string::npos);
    CHECK(r.err.find("AP3D@0.5 = 1.0000") != std::string::npos);
}

TEST_CASE("augment is byte-deterministic across runs and worker counts") {
    const auto dir = fixtures::scratch_dir("cli_aug");
    std::vector<Sample> samples;
    for (int i = 0; i < 4; ++i)
        samples.push_back(i % 2 == 0 ? fixtures::paste_scene("a" + std::to_string(i), 10 + i)
                                     : fixtures::paste_target_scene("a" + std::to_string(i), 10 + i));
    const auto manifest_path = fixtures::write_dataset(dir, samples);

    auto run = [&](const std::string& out_name, int workers) {
        const CliResult r = run_cli("augment --input " + manifest_path.string() + " --output " +
                                        (dir / out_name).string() + " --seed 7 --workers " +
                                        std::to_string(workers) + " --set rotation_enabled=on",
                                    dir);
        REQUIRE(r.exit_code == 0);
    };
    run("out1", 1);
    run("out2", 3);

    CHECK(slurp(dir / "out1/manifest.json") == slurp(dir / "out2/manifest.json"));
    for (int i = 0; i < 4; ++i) {
        const std::string name = "images/a" + std::to_string(i) + ".png";
        const std::string img1 = slurp(dir / "out1" / name);
        CHECK(!img1.empty());
        CHECK(img1 == slurp(dir / "out2" / name));
    }

    // output manifest stays loadable and valid
    const DatasetManifest out = load_manifest(dir / "out1/manifest.json");
    CHECK(out.images.size() == 4);
}

TEST_CASE("augment --dry-run prints one JSON line per sample and writes nothing") {
    const auto dir = fixtures::scratch_dir("cli_dry");
    const auto manifest_path = fixtures::write_dataset(
        dir, {fixtures::default_scene("d0", 3), fixtures::default_scene("d1", 4)});
    const CliResult r = run_cli(
        "augment --input " + manifest_path.string() + " --seed 3 --dry-run", dir);
    CHECK(r.exit_code == 0);
    CHECK(count_lines(r.out) == 2);
    CHECK(r.out.find("\"image_id\":\"d0\"") != std::string::npos);
    CHECK(r.out.find("\"pasted\"") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(dir / "out"));
}

TEST_CASE("stats writes the expected histogram shapes") {
    const auto dir = fixtures::scratch_dir("cli_stats");
    const auto manifest_path = fixtures::write_dataset(dir, {fixtures::default_scene("s0", 5)});
    const CliResult r = run_cli("stats --input " + manifest_path.string() + " --out-dir " +
                                    (dir / "st").string(),
                                dir);
    CHECK(r.exit_code == 0);
    // header + 40 bins + overflow
    CHECK(count_lines(slurp(dir / "st/depth.csv")) == 42);
    // header + 36 bins
    CHECK(count_lines(slurp(dir / "st/rotation.csv")) == 37);
    CHECK(count_lines(slurp(dir / "st/width.csv")) == 52);
    const std::string cats = slurp(dir / "st/categories.csv");
    CHECK(cats.find("car") != std::string::npos);

    // histogram mass equals the number of boxes
    const DatasetManifest m = load_manifest(manifest_path);
    std::size_t boxes = 0;
    for (const auto& img : m.images) boxes += img.annotations.size();
    std::istringstream depth(slurp(dir / "st/depth.csv"));
    std::string line;
    std::getline(depth, line);  // header
    std::size_t mass = 0;
    while (std::getline(depth, line)) mass += std::stoull(line.substr(line.find(',') + 1));
    CHECK(mass == boxes);
}

TEST_CASE("plane-fit emits one CSV row per image") {
    const auto dir = fixtures::scratch_dir("cli_plane");
    const auto manifest_path = fixtures::write_dataset(dir, {fixtures::default_scene("p0", 6)});
    const CliResult r = run_cli("plane-fit --input " + manifest_path.string(), dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("image_id,status,n_x,n_y,n_z,d") != std::string::npos);
    CHECK(r.out.find("p0,ok,") != std::string::npos);
    // fixture plane is y = 2
    CHECK(r.out.find(",ok,0,1,0,2") != std::string::npos);
}

TEST_CASE("render writes a PNG overlay") {
    const auto dir = fixtures::scratch_dir("cli_render");
    const auto manifest_path = fixtures::write_dataset(dir, {fixtures::default_scene("r0", 7)});
    const CliResult r = run_cli("render --input " + manifest_path.string() + " --image-id r0 --out " +
                                    (dir / "overlay.png").string(),
                                dir);
    CHECK(r.exit_code == 0);
    CHECK(std::filesystem::exists(dir / "overlay.png"));
}

TEST_CASE("exit codes distinguish validation from I/O errors") {
    const auto dir = fixtures::scratch_dir("cli_exit");
    const CliResult missing = run_cli("plane-fit --input " + (dir / "nope.json").string(), dir);
    CHECK(missing.exit_code == 2);

    const auto manifest_path = fixtures::write_dataset(dir, {fixtures::default_scene("x0", 8)});
    const CliResult bad_cfg = run_cli("augment --input " + manifest_path.string() +
                                          " --seed 1 --dry-run --set no_such_key=1",
                                      dir);
    CHECK(bad_cfg.exit_code == 1);
    CHECK(bad_cfg.err.find("no_such_key") != std::string::npos);

    const CliResult bad_args = run_cli("augment --input " + manifest_path.string(), dir);
    CHECK(bad_args.exit_code == 1);  // --seed is required
}

TEST_SUITE_END();
