#include "groundmix/patchbank.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <unordered_set>

#include "groundmix/plane.hpp"
#include "groundmix/png_io.hpp"

namespace groundmix {

using json = nlohmann::ordered_json;

namespace {
constexpr double kMaxDifficulty = std::numeric_limits<double>::infinity();
}

PatchBank::InsertOutcome PatchBank::try_insert_patch(const Sample& sample, std::size_t box_index) {
    const LabeledBox& target = sample.labels.at(box_index);
    const std::string uid = sample.image_id + "#" + std::to_string(box_index);

    const Box2D& box2d = target.box2d;
    if (box2d.area() <= 0.0) return {InsertStatus::rejected_degenerate, uid};

    // integer crop rectangle, clamped to the image
    const int x0 = std::clamp(static_cast<int>(std::floor(box2d.x0)), 0, sample.image.width);
    const int y0 = std::clamp(static_cast<int>(std::floor(box2d.y0)), 0, sample.image.height);
    const int x1 = std::clamp(static_cast<int>(std::ceil(box2d.x1)), 0, sample.image.width);
    const int y1 = std::clamp(static_cast<int>(std::ceil(box2d.y1)), 0, sample.image.height);
    if (x1 - x0 < 1 || y1 - y0 < 1) return {InsertStatus::rejected_degenerate, uid};

    for (std::size_t j = 0; j < sample.labels.size(); ++j) {
        if (j == box_index) continue;
        const double inter = intersection_area(box2d, sample.labels[j].box2d);
        if (inter / box2d.area() > cfg_.intrusion_threshold)
            return {InsertStatus::rejected_intrusion, uid};
    }

    Patch p;
    p.pixels = crop(sample.image, x0, y0, x1 - x0, y1 - y0);
    p.source_focal = sample.intrinsics.fy;
    p.source_depth = target.box.center.z();
    p.label = target.box;
    p.source_image_id = sample.image_id;
    p.uid = uid;
    // where the object's ground contact point sits inside the crop
    const Vec3 bc = bottom_center(target.box);
    if (bc.z() > 0.0) {
        const Vec2 px = project(sample.intrinsics, bc);
        p.rel_bottom = Vec2((px.x() - x0) / (x1 - x0), (px.y() - y0) / (y1 - y0));
    }

    std::unique_lock lock(mutex_);
    for (Entry& e : entries_) {
        if (e.patch.uid == uid) {
            e.patch = std::move(p);  // refresh pixels, keep difficulty
            return {InsertStatus::accepted, uid};
        }
    }
    entries_.push_back(Entry{std::move(p), kMaxDifficulty, next_seq_++});
    while (entries_.size() > cfg_.capacity) entries_.pop_front();
    return {InsertStatus::accepted, uid};
}

std::string PatchBank::insert_patch(const Sample& sample, std::size_t box_index) {
    const InsertOutcome out = try_insert_patch(sample, box_index);
    switch (out.status) {
        case InsertStatus::accepted:
            return out.uid;
        case InsertStatus::rejected_intrusion:
            throw RejectedIntrusion("patch " + out.uid + ": intruding object above threshold");
        case InsertStatus::rejected_degenerate:
        default:
            throw RejectedDegenerate("patch " + out.uid + ": degenerate 2D box");
    }
}

const PatchBank::Entry* PatchBank::find_locked(const std::string& uid) const {
    for (const Entry& e : entries_)
        if (e.patch.uid == uid) return &e;
    return nullptr;
}

void PatchBank::update_difficulty(const std::string& uid, double score) {
    if (!(score >= 0.0)) throw ValidationError("difficulty must be non-negative");
    std::unique_lock lock(mutex_);
    for (Entry& e : entries_) {
        if (e.patch.uid == uid) {
            e.difficulty = score;
            return;
        }
    }
    throw UnknownUid("no patch with uid " + uid);
}

double PatchBank::difficulty(const std::string& uid) const {
    std::shared_lock lock(mutex_);
    const Entry* e = find_locked(uid);
    if (!e) throw UnknownUid("no patch with uid " + uid);
    return e->difficulty;
}

std::size_t PatchBank::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::pair<double, double> PatchBank::depth_range() const {
    std::shared_lock lock(mutex_);
    if (entries_.empty()) throw EmptyBank("depth_range of an empty bank");
    double lo = entries_.front().patch.source_depth, hi = lo;
    for (const Entry& e : entries_) {
        lo = std::min(lo, e.patch.source_depth);
        hi = std::max(hi, e.patch.source_depth);
    }
    return {lo, hi};
}

int PatchBank::bin_of_locked(double depth, double z_min, double z_max) const {
    const int b = std::max(1, cfg_.depth_bins);
    const double width = (z_max - z_min) / static_cast<double>(b);
    if (width <= 0.0) return 0;
    const int idx = static_cast<int>(std::floor((depth - z_min) / width));
    return std::clamp(idx, 0, b - 1);
}

int PatchBank::bin_of(double depth) const {
    const auto [lo, hi] = depth_range();
    std::shared_lock lock(mutex_);
    return bin_of_locked(depth, lo, hi);
}

std::vector<Patch> PatchBank::sample_hard_patches(Rng& rng, std::size_t count) const {
    std::shared_lock lock(mutex_);
    if (entries_.empty()) throw EmptyBank("sample_hard_patches on an empty bank");

    double z_min = entries_.front().patch.source_depth, z_max = z_min;
    for (const Entry& e : entries_) {
        z_min = std::min(z_min, e.patch.source_depth);
        z_max = std::max(z_max, e.patch.source_depth);
    }

    const int b = std::max(1, cfg_.depth_bins);
    std::vector<std::vector<const Entry*>> bins(static_cast<std::size_t>(b));
    for (const Entry& e : entries_)
        bins[static_cast<std::size_t>(bin_of_locked(e.patch.source_depth, z_min, z_max))].push_back(&e);

    std::vector<std::size_t> non_empty;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (bins[i].empty()) continue;
        non_empty.push_back(i);
        std::stable_sort(bins[i].begin(), bins[i].end(), [](const Entry* a, const Entry* b2) {
            if (a->difficulty != b2->difficulty) return a->difficulty > b2->difficulty;
            return a->seq < b2->seq;
        });
    }

    std::vector<Patch> out;
    out.reserve(count);
    std::unordered_set<std::uint64_t> taken;
    for (std::size_t k = 0; k < count; ++k) {
        const auto& bin = bins[non_empty[rng.uniform_index(non_empty.size())]];
        const std::size_t top =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(
                                         cfg_.hard_fraction * static_cast<double>(bin.size()) - 1e-9)));
        std::vector<const Entry*> pool;
        for (std::size_t i = 0; i < top; ++i)
            if (!taken.count(bin[i]->seq)) pool.push_back(bin[i]);
        if (pool.empty()) pool.assign(bin.begin(), bin.begin() + static_cast<std::ptrdiff_t>(top));
        const Entry* pick = pool[rng.uniform_index(pool.size())];
        taken.insert(pick->seq);
        out.push_back(pick->patch);
    }
    return out;
}

const Patch& PatchBank::at(std::size_t i) const {
    std::shared_lock lock(mutex_);
    return entries_.at(i).patch;
}

// ---------------------------------------------------------------------------
// On-disk cache
// ---------------------------------------------------------------------------

void PatchBank::save(const std::filesystem::path& dir) const {
    std::shared_lock lock(mutex_);
    std::filesystem::create_directories(dir);
    json index;
    index["capacity"] = cfg_.capacity;
    index["depth_bins"] = cfg_.depth_bins;
    index["hard_fraction"] = cfg_.hard_fraction;
    index["intrusion_threshold"] = cfg_.intrusion_threshold;
    index["count"] = entries_.size();
    std::ofstream f(dir / "bank.json", std::ios::trunc);
    if (!f) throw IoError("cannot write " + (dir / "bank.json").string());
    f << index.dump(2) << '\n';

    std::size_t i = 0;
    for (const Entry& e : entries_) {
        char name[32];
        std::snprintf(name, sizeof name, "%06zu", i++);
        write_png(e.patch.pixels, dir / (std::string(name) + ".png"));
        json jp;
        jp["uid"] = e.patch.uid;
        jp["source_image_id"] = e.patch.source_image_id;
        jp["source_focal"] = e.patch.source_focal;
        jp["source_depth"] = e.patch.source_depth;
        jp["category_id"] = e.patch.label.category;
        jp["dimensions"] = json::array(
            {e.patch.label.dims.x(), e.patch.label.dims.y(), e.patch.label.dims.z()});
        jp["center_cam"] = json::array(
            {e.patch.label.center.x(), e.patch.label.center.y(), e.patch.label.center.z()});
        json r = json::array();
        for (int k = 0; k < 9; ++k) r.push_back(e.patch.label.rotation.m(k / 3, k % 3));
        jp["R_cam"] = r;
        jp["rel_bottom"] = json::array({e.patch.rel_bottom.x(), e.patch.rel_bottom.y()});
        // +infinity is not representable in JSON; null encodes "never updated"
        if (std::isfinite(e.difficulty))
            jp["difficulty"] = e.difficulty;
        else
            jp["difficulty"] = nullptr;
        std::ofstream side(dir / (std::string(name) + ".json"), std::ios::trunc);
        if (!side) throw IoError("cannot write patch sidecar in " + dir.string());
        side << jp.dump(2) << '\n';
    }
}

PatchBank PatchBank::load(const std::filesystem::path& dir, BankConfig cfg) {
    std::ifstream f(dir / "bank.json");
    if (!f) throw IoError("cannot open " + (dir / "bank.json").string());
    json index;
    try {
        index = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bank index parse error: ") + e.what());
    }

    cfg.capacity = index.value("capacity", cfg.capacity);
    cfg.depth_bins = index.value("depth_bins", cfg.depth_bins);
    cfg.hard_fraction = index.value("hard_fraction", cfg.hard_fraction);
    cfg.intrusion_threshold = index.value("intrusion_threshold", cfg.intrusion_threshold);
    PatchBank bank(cfg);

    try {
        const std::size_t count = index.at("count").get<std::size_t>();
        for (std::size_t i = 0; i < count; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%06zu", i);
            std::ifstream side(dir / (std::string(name) + ".json"));
            if (!side) throw IoError("missing patch sidecar " + std::string(name) + ".json");
            const json jp = json::parse(side);

            Entry e;
            e.patch.pixels = read_png(dir / (std::string(name) + ".png"));
            e.patch.uid = jp.at("uid").get<std::string>();
            e.patch.source_image_id = jp.at("source_image_id").get<std::string>();
            e.patch.source_focal = jp.at("source_focal").get<double>();
            e.patch.source_depth = jp.at("source_depth").get<double>();
            e.patch.label.category = jp.at("category_id").get<int>();
            const json& jd = jp.at("dimensions");
            e.patch.label.dims = Vec3(jd[0].get<double>(), jd[1].get<double>(), jd[2].get<double>());
            const json& jc = jp.at("center_cam");
            e.patch.label.center = Vec3(jc[0].get<double>(), jc[1].get<double>(), jc[2].get<double>());
            const json& jr = jp.at("R_cam");
            for (int k = 0; k < 9; ++k) e.patch.label.rotation.m(k / 3, k % 3) = jr[k].get<double>();
            const json& jb = jp.at("rel_bottom");
            e.patch.rel_bottom = Vec2(jb[0].get<double>(), jb[1].get<double>());
            e.difficulty =
                jp.at("difficulty").is_null() ? kMaxDifficulty : jp.at("difficulty").get<double>();
            e.seq = bank.next_seq_++;
            bank.entries_.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bank sidecar field error: ") + e.what());
    }
    return bank;
}

}  // namespace groundmix
