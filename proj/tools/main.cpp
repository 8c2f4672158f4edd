#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "groundmix/augment.hpp"
#include "groundmix/dataset.hpp"
#include "groundmix/eval.hpp"
#include "groundmix/patchbank.hpp"
#include "groundmix/plane.hpp"
#include "groundmix/png_io.hpp"
#include "groundmix/rng.hpp"

namespace gm = groundmix;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Config file: flat "key = value" lines, '#' comments
// ---------------------------------------------------------------------------

std::map<std::string, std::string> parse_config_text(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        if (strip(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw gm::ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
        kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
    }
    return kv;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw gm::ValidationError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw gm::ValidationError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

void apply_config(const std::map<std::string, std::string>& kv, gm::AugmentConfig& cfg,
                  gm::BankConfig& bank) {
    for (const auto& [key, value] : kv) {
        if (key == "f_ref") cfg.f_ref = parse_double(value, key);
        else if (key == "s_max") cfg.s_max = parse_double(value, key);
        else if (key == "max_pastes") cfg.max_pastes = static_cast<int>(parse_double(value, key));
        else if (key == "mixup_prob") cfg.mixup_prob = parse_double(value, key);
        else if (key == "scale_prob") cfg.scale_prob = parse_double(value, key);
        else if (key == "rotation_enabled") cfg.rotation_enabled = parse_bool(value, key);
        else if (key == "rotation_prob") cfg.rotation_prob = parse_double(value, key);
        else if (key == "rotation_min") cfg.rotation_min = parse_double(value, key);
        else if (key == "rotation_max") cfg.rotation_max = parse_double(value, key);
        else if (key == "scale_min") cfg.scale_min = parse_double(value, key);
        else if (key == "scale_max") cfg.scale_max = parse_double(value, key);
        else if (key == "intrusion_threshold") {
            cfg.intrusion_threshold = parse_double(value, key);
            bank.intrusion_threshold = cfg.intrusion_threshold;
        } else if (key == "bank_capacity")
            bank.capacity = static_cast<std::size_t>(parse_double(value, key));
        else if (key == "bank_depth_bins") bank.depth_bins = static_cast<int>(parse_double(value, key));
        else if (key == "bank_hard_fraction") bank.hard_fraction = parse_double(value, key);
        else throw gm::ValidationError("unknown config key '" + key + "'");
    }
    for (double p : {cfg.mixup_prob, cfg.scale_prob, cfg.rotation_prob})
        if (p < 0.0 || p > 1.0) throw gm::ValidationError("probabilities must be in [0, 1]");
    if (cfg.s_max <= 0.0) throw gm::ValidationError("s_max must be > 0");
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

struct AugmentArgs {
    std::string input;
    std::string images_root;
    std::string output;
    std::uint64_t seed = 0;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string difficulty_path;
    std::string bank_cache;
    int workers = 1;
    bool dry_run = false;
};

json log_to_json(const gm::SampleAugmentLog& lg, const std::string& image_id) {
    json j;
    j["image_id"] = image_id;
    j["ground_mix"] = json{{"applied", lg.ground_mix_applied},
                           {"attempts", lg.ground_mix.attempts},
                           {"pasted", lg.ground_mix.pasted},
                           {"skipped_unproject", lg.ground_mix.skipped_unproject},
                           {"skipped_scale", lg.ground_mix.skipped_scale},
                           {"skipped_bounds", lg.ground_mix.skipped_bounds},
                           {"skipped_overlap", lg.ground_mix.skipped_overlap}};
    j["scale"] = json{{"applied", lg.scaled}, {"target_height", lg.target_height}};
    j["rotation"] = json{{"applied", lg.rotated}, {"phi", lg.phi}};
    j["mixup"] = json{{"applied", lg.mixed},
                      {"partner", lg.partner_id},
                      {"skipped_mismatch", lg.mixup_skipped_mismatch}};
    return j;
}

int run_augment(const AugmentArgs& args) {
    const fs::path manifest_path(args.input);
    const fs::path images_root =
        args.images_root.empty() ? manifest_path.parent_path() : fs::path(args.images_root);

    gm::AugmentConfig cfg;
    gm::BankConfig bank_cfg;
    std::map<std::string, std::string> kv;
    if (!args.config_path.empty()) {
        std::ifstream f(args.config_path);
        if (!f) throw gm::IoError("cannot open config " + args.config_path);
        kv = parse_config_text(f);
    }
    for (const std::string& ov : args.overrides) {
        std::istringstream ss(ov);
        const auto one = parse_config_text(ss);
        for (const auto& [k, v] : one) kv[k] = v;
    }
    apply_config(kv, cfg, bank_cfg);

    const gm::DatasetManifest manifest = gm::load_manifest(manifest_path);

    fs::path out_dir;
    if (!args.dry_run) {
        if (args.output.empty()) throw gm::ValidationError("--output is required unless --dry-run");
        out_dir = fs::path(args.output);
        if (fs::weakly_canonical(out_dir) == fs::weakly_canonical(images_root) ||
            fs::weakly_canonical(out_dir / "manifest.json") == fs::weakly_canonical(manifest_path) ||
            fs::weakly_canonical(out_dir / "images") == fs::weakly_canonical(images_root))
            throw gm::ValidationError("output directory would overwrite the inputs");
        fs::create_directories(out_dir / "images");
    }

    // samples are loaded on demand; only the patch bank keeps crops resident
    gm::PatchBank bank(bank_cfg);
    if (!args.bank_cache.empty() && fs::exists(fs::path(args.bank_cache) / "bank.json")) {
        bank = gm::PatchBank::load(args.bank_cache, bank_cfg);
        std::cerr << "loaded patch bank (" << bank.size() << " patches) from " << args.bank_cache
                  << "\n";
    } else {
        int accepted = 0, rejected = 0;
        for (std::size_t i = 0; i < manifest.images.size(); ++i) {
            const gm::Sample s = gm::load_sample(manifest, i, images_root);
            for (std::size_t b = 0; b < s.labels.size(); ++b) {
                const auto outcome = bank.try_insert_patch(s, b);
                (outcome.status == gm::PatchBank::InsertStatus::accepted ? accepted : rejected)++;
            }
        }
        std::cerr << "patch bank: " << accepted << " accepted, " << rejected << " rejected\n";
        if (!args.bank_cache.empty()) bank.save(args.bank_cache);
    }

    if (!args.difficulty_path.empty()) {
        std::ifstream f(args.difficulty_path);
        if (!f) throw gm::IoError("cannot open difficulty file " + args.difficulty_path);
        json scores;
        try {
            scores = json::parse(f);
        } catch (const json::parse_error& e) {
            throw gm::ParseError(std::string("difficulty file: ") + e.what());
        }
        for (const auto& [uid, v] : scores.items()) {
            try {
                bank.update_difficulty(uid, v.get<double>());
            } catch (const gm::UnknownUid&) {
                std::cerr << "difficulty for unknown uid '" << uid << "' ignored\n";
            }
        }
    }

    const std::size_t n = manifest.images.size();
    std::vector<gm::Sample> results(n);
    std::vector<gm::SampleAugmentLog> logs(n);

    std::atomic<std::size_t> cursor{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= n) return;
            try {
                const gm::Sample s = gm::load_sample(manifest, i, images_root);
                gm::PartnerSource partners;
                partners.count = n - 1;
                partners.load = [&, i](std::size_t j) {
                    return gm::load_sample(manifest, j < i ? j : j + 1, images_root);
                };
                gm::Rng rng(gm::derive_seed(args.seed, s.image_id));
                results[i] = gm::augment_sample(s, bank, cfg, partners, rng, &logs[i]);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    const int n_workers = std::max(1, args.workers);
    std::vector<std::thread> threads;
    for (int t = 1; t < n_workers; ++t) threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    if (args.dry_run) {
        for (std::size_t i = 0; i < results.size(); ++i)
            std::cout << log_to_json(logs[i], results[i].image_id).dump() << "\n";
    } else {
        gm::DatasetManifest out = manifest;
        out.images.clear();
        for (const gm::Sample& s : results) {
            const std::string file_name = "images/" + s.image_id + ".png";
            gm::write_png(s.image, out_dir / file_name);
            out.images.push_back(gm::record_from_sample(s, file_name));
        }
        gm::save_manifest(out, out_dir / "manifest.json");
    }

    int total_pastes = 0, mixed = 0, rotated = 0, scaled = 0;
    for (const auto& lg : logs) {
        total_pastes += lg.ground_mix.pasted;
        mixed += lg.mixed ? 1 : 0;
        rotated += lg.rotated ? 1 : 0;
        scaled += lg.scaled ? 1 : 0;
    }
    std::cerr << "augmented " << results.size() << " sample(s): " << total_pastes << " paste(s), "
              << scaled << " rescaled, " << rotated << " rotated, " << mixed << " mixed\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string gt_path;
    std::string detections_path;
    std::string out_path;  // empty -> stdout
    double threshold = 0.5;
};

int run_evaluate(const EvaluateArgs& args) {
    const gm::DatasetManifest manifest = gm::load_manifest(args.gt_path);

    std::map<std::string, const gm::ImageRecord*> image_by_id;
    for (const gm::ImageRecord& img : manifest.images) image_by_id[img.id] = &img;
    std::map<std::string, int> category_by_name;
    for (const gm::Category& c : manifest.categories) category_by_name[c.name] = c.id;

    std::vector<gm::GtObject> gts;
    for (const gm::ImageRecord& img : manifest.images)
        for (const gm::AnnotationRecord& ann : img.annotations)
            gts.push_back(gm::GtObject{img.id, ann.category_id, ann.to_box3d(), ann.bbox2d});

    std::vector<gm::Detection> dets;
    std::ifstream f(args.detections_path);
    if (!f) throw gm::IoError("cannot open detections " + args.detections_path);
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw gm::ParseError("detections line " + std::to_string(line_no) + ": " + e.what());
        }
        gm::Detection d;
        try {
            d.image_id = j.at("image_id").get<std::string>();
            const json& jc = j.at("category");
            if (jc.is_string()) {
                const auto it = category_by_name.find(jc.get<std::string>());
                if (it == category_by_name.end())
                    throw gm::ValidationError("detections line " + std::to_string(line_no) +
                                              ": unknown category '" + jc.get<std::string>() + "'");
                d.category = it->second;
            } else {
                d.category = jc.get<int>();
            }
            d.score = j.at("score").get<double>();
            const json& ctr = j.at("center_cam");
            d.box.center = gm::Vec3(ctr[0].get<double>(), ctr[1].get<double>(), ctr[2].get<double>());
            const json& dim = j.at("dimensions");
            d.box.dims = gm::Vec3(dim[0].get<double>(), dim[1].get<double>(), dim[2].get<double>());
            const json& rot = j.at("R_cam");
            for (int k = 0; k < 9; ++k) d.box.rotation.m(k / 3, k % 3) = rot[k].get<double>();
        } catch (const json::exception& e) {
            throw gm::ParseError("detections line " + std::to_string(line_no) + ": " + e.what());
        }
        d.box.score = d.score;
        d.box.category = d.category;
        if (d.score < 0.0 || d.score > 1.0)
            throw gm::ValidationError("detections line " + std::to_string(line_no) +
                                      ": score outside [0, 1]");
        if (!(d.box.dims.array() > 0.0).all())
            throw gm::ValidationError("detections line " + std::to_string(line_no) +
                                      ": dimensions must be positive");
        const auto img_it = image_by_id.find(d.image_id);
        if (img_it == image_by_id.end())
            throw gm::ValidationError("detections line " + std::to_string(line_no) +
                                      ": unknown image '" + d.image_id + "'");
        const gm::ImageRecord& img = *img_it->second;
        d.box2d = gm::project_box_to_2d(d.box, img.intrinsics, img.width, img.height)
                      .value_or(gm::Box2D{});
        dets.push_back(std::move(d));
    }

    std::ostringstream csv;
    csv << "category_id,category,ap3d,ap2d,ap_depth,ap_3dp,num_gt,num_det\n";
    std::ostringstream summary;
    char buf[256];
    double m3 = 0, m2 = 0, md = 0, mp = 0;
    int classes = 0;
    for (const gm::Category& cat : manifest.categories) {
        const std::size_t num_gt = static_cast<std::size_t>(
            std::count_if(gts.begin(), gts.end(),
                          [&](const gm::GtObject& g) { return g.category == cat.id; }));
        if (num_gt == 0) continue;
        const std::size_t num_det = static_cast<std::size_t>(
            std::count_if(dets.begin(), dets.end(),
                          [&](const gm::Detection& d) { return d.category == cat.id; }));
        const double a3 = gm::ap3d(dets, gts, cat.id, args.threshold);
        const double a2 = gm::ap2d(dets, gts, cat.id);
        const double ad = gm::ap_depth(dets, gts, cat.id);
        const double ap = gm::ap_3dp(dets, gts, cat.id);
        std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f,%.6f,%.6f,%zu,%zu\n", cat.id,
                      cat.name.c_str(), a3, a2, ad, ap, num_gt, num_det);
        csv << buf;
        std::snprintf(buf, sizeof buf, "%-12s AP3D@%.2g = %.4f | AP2D = %.4f | APDepth = %.4f | AP3DP = %.4f\n",
                      cat.name.c_str(), args.threshold, a3, a2, ad, ap);
        summary << buf;
        m3 += a3;
        m2 += a2;
        md += ad;
        mp += ap;
        ++classes;
    }
    if (classes > 0) {
        std::snprintf(buf, sizeof buf, "-1,mean,%.6f,%.6f,%.6f,%.6f,,\n", m3 / classes, m2 / classes,
                      md / classes, mp / classes);
        csv << buf;
        std::snprintf(buf, sizeof buf, "%-12s AP3D@%.2g = %.4f | AP2D = %.4f | APDepth = %.4f | AP3DP = %.4f\n",
                      "mean", args.threshold, m3 / classes, m2 / classes, md / classes, mp / classes);
        summary << buf;
    }

    if (args.out_path.empty() || args.out_path == "-") {
        std::cout << csv.str();
    } else {
        std::ofstream out(args.out_path, std::ios::trunc);
        if (!out) throw gm::IoError("cannot write " + args.out_path);
        out << csv.str();
    }
    std::cerr << summary.str();
    return 0;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

int run_stats(const std::string& input, const std::string& out_dir, bool no_rotation,
              const std::string& plane_source) {
    const gm::DatasetManifest manifest = gm::load_manifest(input);
    gm::PlaneSource src = gm::PlaneSource::stored_or_fit;
    if (plane_source == "stored") src = gm::PlaneSource::stored;
    else if (plane_source == "fit") src = gm::PlaneSource::fit_from_boxes;
    else if (plane_source != "auto")
        throw gm::ValidationError("--plane-source must be stored, fit or auto");

    const gm::DatasetStats stats = gm::compute_stats(manifest, src, !no_rotation);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    gm::write_histogram_csv(stats.depth, dir / "depth.csv");
    if (stats.rotation_included) gm::write_histogram_csv(stats.rotation, dir / "rotation.csv");
    gm::write_histogram_csv(stats.dim_w, dir / "width.csv");
    gm::write_histogram_csv(stats.dim_h, dir / "height.csv");
    gm::write_histogram_csv(stats.dim_l, dir / "length.csv");

    std::ofstream cat(dir / "categories.csv", std::ios::trunc);
    if (!cat) throw gm::IoError("cannot write categories.csv");
    cat << "category_id,category,count\n";
    for (const auto& [id, count] : stats.category_counts) {
        const gm::Category* c = manifest.find_category(id);
        cat << id << ',' << (c ? c->name : "?") << ',' << count << '\n';
    }
    std::cerr << "stats over " << stats.box_count << " boxes written to " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// plane-fit
// ---------------------------------------------------------------------------

int run_plane_fit(const std::string& input, const std::string& out_path) {
    const gm::DatasetManifest manifest = gm::load_manifest(input);
    std::ostringstream csv;
    csv << "image_id,status,n_x,n_y,n_z,d\n";
    char buf[256];
    for (const gm::ImageRecord& img : manifest.images) {
        std::vector<gm::Vec3> pts;
        for (const gm::AnnotationRecord& ann : img.annotations)
            pts.push_back(gm::bottom_center(ann.to_box3d()));
        try {
            const gm::GroundPlane p = gm::fit_ground_plane(pts);
            std::snprintf(buf, sizeof buf, "%s,ok,%.12g,%.12g,%.12g,%.12g\n", img.id.c_str(),
                          p.normal.x(), p.normal.y(), p.normal.z(), p.offset);
        } catch (const gm::TooFewPoints&) {
            std::snprintf(buf, sizeof buf, "%s,too_few_points,,,,\n", img.id.c_str());
        } catch (const gm::DegenerateGeometry&) {
            std::snprintf(buf, sizeof buf, "%s,degenerate,,,,\n", img.id.c_str());
        }
        csv << buf;
    }
    if (out_path.empty() || out_path == "-") {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw gm::IoError("cannot write " + out_path);
        out << csv.str();
    }
    return 0;
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

int run_render(const std::string& input, const std::string& images_root, const std::string& image_id,
               int index, const std::string& out_path) {
    const fs::path manifest_path(input);
    const gm::DatasetManifest manifest = gm::load_manifest(manifest_path);
    const fs::path root = images_root.empty() ? manifest_path.parent_path() : fs::path(images_root);

    std::size_t idx = static_cast<std::size_t>(std::max(0, index));
    if (!image_id.empty()) {
        bool found = false;
        for (std::size_t i = 0; i < manifest.images.size(); ++i)
            if (manifest.images[i].id == image_id) {
                idx = i;
                found = true;
                break;
            }
        if (!found) throw gm::ValidationError("no image with id '" + image_id + "'");
    }
    if (idx >= manifest.images.size()) throw gm::ValidationError("image index out of range");
    gm::render_overlay(gm::load_sample(manifest, idx, root), out_path);
    std::cerr << "rendered " << manifest.images[idx].id << " to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ground-plane-aware 3D detection data tooling"};
    app.require_subcommand(1);

    AugmentArgs aug;
    CLI::App* c_aug = app.add_subcommand("augment", "Augment a dataset deterministically");
    c_aug->add_option("--input", aug.input, "input manifest JSON")->required();
    c_aug->add_option("--images-root", aug.images_root, "image directory (default: manifest dir)");
    c_aug->add_option("--output", aug.output, "output directory");
    c_aug->add_option("--seed", aug.seed, "RNG seed (required: no ambient randomness)")->required();
    c_aug->add_option("--config", aug.config_path, "key = value config file");
    c_aug->add_option("--set", aug.overrides, "config override, e.g. --set mixup_prob=0");
    c_aug->add_option("--difficulty", aug.difficulty_path, "JSON map of object uid -> difficulty");
    c_aug->add_option("--bank-cache", aug.bank_cache, "patch bank cache directory");
    c_aug->add_option("--workers", aug.workers, "worker threads")->default_val(1);
    c_aug->add_flag("--dry-run", aug.dry_run, "print planned operations as JSON lines; write nothing");

    EvaluateArgs ev;
    CLI::App* c_ev = app.add_subcommand("evaluate", "Evaluate detections against a manifest");
    c_ev->add_option("--gt", ev.gt_path, "ground-truth manifest JSON")->required();
    c_ev->add_option("--detections", ev.detections_path, "detections JSON-lines file")->required();
    c_ev->add_option("--out", ev.out_path, "metrics CSV path (default: stdout)");
    c_ev->add_option("--iou-threshold", ev.threshold, "3D IoU threshold")->default_val(0.5);

    std::string st_input, st_out_dir, st_plane_source = "auto";
    bool st_no_rotation = false;
    CLI::App* c_st = app.add_subcommand("stats", "Dataset statistics as CSV histograms");
    c_st->add_option("--input", st_input, "manifest JSON")->required();
    c_st->add_option("--out-dir", st_out_dir, "output directory")->required();
    c_st->add_flag("--no-rotation", st_no_rotation, "skip the rotation histogram");
    c_st->add_option("--plane-source", st_plane_source, "stored | fit | auto");

    std::string pf_input, pf_out;
    CLI::App* c_pf = app.add_subcommand("plane-fit", "Per-image ground plane as CSV");
    c_pf->add_option("--input", pf_input, "manifest JSON")->required();
    c_pf->add_option("--out", pf_out, "CSV path (default: stdout)");

    std::string rd_input, rd_root, rd_id, rd_out;
    int rd_index = 0;
    CLI::App* c_rd = app.add_subcommand("render", "Render box overlays for one sample");
    c_rd->add_option("--input", rd_input, "manifest JSON")->required();
    c_rd->add_option("--images-root", rd_root, "image directory (default: manifest dir)");
    c_rd->add_option("--image-id", rd_id, "sample id (default: --index)");
    c_rd->add_option("--index", rd_index, "sample index")->default_val(0);
    c_rd->add_option("--out", rd_out, "output PNG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_aug->parsed()) return run_augment(aug);
        if (c_ev->parsed()) return run_evaluate(ev);
        if (c_st->parsed()) return run_stats(st_input, st_out_dir, st_no_rotation, st_plane_source);
        if (c_pf->parsed()) return run_plane_fit(pf_input, pf_out);
        if (c_rd->parsed()) return run_render(rd_input, rd_root, rd_id, rd_index, rd_out);
    } catch (const gm::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
