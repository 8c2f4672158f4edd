#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <shared_mutex>
#include <string>
#include <vector>

#include "groundmix/dataset.hpp"
#include "groundmix/geometry.hpp"
#include "groundmix/image.hpp"
#include "groundmix/rng.hpp"

namespace groundmix {

/// A cropped object with everything needed to re-place it in another image.
struct Patch {
    Image pixels;                 ///< crop of the source image at the 2D box
    double source_focal = 0.0;    ///< f_p: fy of the source camera, pixels
    double source_depth = 0.0;    ///< z_p: source box center depth, meters
    Box3D label;                  ///< category, dims, rotation (center = source center)
    std::string source_image_id;
    std::string uid;              ///< "<image_id>#<annotation index>"
    Vec2 rel_bottom = Vec2(0.5, 1.0);  ///< bottom-center pixel, in crop-size units
};

struct BankConfig {
    std::size_t capacity = 10000;      ///< FIFO eviction beyond this
    int depth_bins = 6;                ///< b
    double hard_fraction = 0.20;       ///< m: sample among the top fraction per bin
    double intrusion_threshold = 0.35; ///< max tolerated overlap of another box with the crop
};

/// Patch buffer with per-object difficulty scores and hard mining.
///
/// Difficulty scores are externally supplied opaque non-negative reals and
/// start at +infinity, so never-trained objects are treated as maximally
/// difficult. Writers are serialized; sampling takes a shared lock and sees a
/// consistent snapshot.
class PatchBank {
public:
    explicit PatchBank(BankConfig cfg = {}) : cfg_(cfg) {}

    PatchBank(const PatchBank& o) : cfg_(o.cfg_), entries_(o.entries_), next_seq_(o.next_seq_) {}
    PatchBank& operator=(const PatchBank& o) {
        if (this != &o) {
            cfg_ = o.cfg_;
            entries_ = o.entries_;
            next_seq_ = o.next_seq_;
        }
        return *this;
    }

    /// Crops the 2D box of sample.labels[box_index] and stores it.
    /// Throws RejectedDegenerate when the box has no usable pixel area and
    /// RejectedIntrusion when another box overlaps the crop by more than the
    /// configured threshold. Re-inserting a known uid refreshes the pixels
    /// and keeps the recorded difficulty.
    std::string insert_patch(const Sample& sample, std::size_t box_index);

    enum class InsertStatus { accepted, rejected_intrusion, rejected_degenerate };
    struct InsertOutcome {
        InsertStatus status;
        std::string uid;
    };
    InsertOutcome try_insert_patch(const Sample& sample, std::size_t box_index);

    /// Replaces the stored score. Rejects negative scores; throws UnknownUid
    /// for uids not in the bank.
    void update_difficulty(const std::string& uid, double score);
    double difficulty(const std::string& uid) const;

    /// Hard-mined sampling: (1) pick a depth bin uniformly among non-empty
    /// bins, (2) rank the bin by difficulty descending (ties: insertion
    /// order), (3) pick uniformly among the top ceil(m*n) >= 1 candidates.
    /// Within one call patches are not repeated while alternatives remain;
    /// across calls sampling is with replacement. Throws EmptyBank.
    std::vector<Patch> sample_hard_patches(Rng& rng, std::size_t count) const;

    std::size_t size() const;
    bool empty() const { return size() == 0; }

    /// Observed [min, max] of stored source depths.
    std::pair<double, double> depth_range() const;

    /// Bin of a depth within [z_min, z_max] split into depth_bins equal bins.
    /// A value exactly on an interior edge belongs to the upper bin; z_max
    /// falls into the last bin.
    int bin_of(double depth) const;

    const Patch& at(std::size_t i) const;  ///< insertion order (post-eviction)
    const BankConfig& config() const { return cfg_; }

    /// Persists crops as PNGs plus one JSON index; load restores the same
    /// insertion order and difficulties.
    void save(const std::filesystem::path& dir) const;
    static PatchBank load(const std::filesystem::path& dir, BankConfig cfg = {});

private:
    struct Entry {
        Patch patch;
        double difficulty;
        std::uint64_t seq;
    };

    int bin_of_locked(double depth, double z_min, double z_max) const;
    const Entry* find_locked(const std::string& uid) const;

    BankConfig cfg_;
    std::deque<Entry> entries_;
    std::uint64_t next_seq_ = 0;
    mutable std::shared_mutex mutex_;
};

}  // namespace groundmix
