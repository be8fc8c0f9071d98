#pragma once
// Hierarchical memory: a raw layer holding every ingested frame grouped by
// cluster, and an index layer holding one embedding per finalized cluster.
//
// On disk:
//   <root>/manifest.json   records, clusters, counts; rewritten via temp+rename
//   <root>/vectors.f32     packed little-endian float32, record i at i*D*4
//   <root>/frames/<id>.png lossless raw frames
//
// The manifest is the commit point. Vector bytes beyond manifest.index_count
// and frame files not referenced by it are leftovers of an interrupted write
// and are ignored (the vector tail is truncated on open).
//
// One writer, any number of readers. Readers work on immutable Snapshots.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "venus/core_types.hpp"

namespace venus {

inline constexpr int kManifestVersion = 1;

struct ScoredIndex {
    IndexId index_id = 0;
    double score = 0.0;
    bool operator==(const ScoredIndex&) const = default;
};

struct TimeRange {
    double start = 0.0;
    double end = 0.0;
    bool contains(double t) const noexcept { return t >= start && t <= end; }
};

/// Stores and serves raw frames by id. Implementations must allow concurrent
/// get() calls alongside put().
class RawLayer {
public:
    virtual ~RawLayer() = default;
    virtual void put(const Frame& frame) = 0;
    /// frame_id and timestamp of the returned frame are filled by the caller's metadata.
    virtual Frame get(FrameId id) const = 0;
};

struct ManifestRecord {
    IndexId index_id = 0;
    FrameId frame_id = 0;
    ClusterId cluster_id = 0;
    double timestamp = 0.0;
    std::string aux_prompt;
    bool operator==(const ManifestRecord&) const = default;
};

struct MemoryManifest {
    int version = kManifestVersion;
    std::uint32_t dimension = 0;
    std::uint64_t sequence = 0;
    std::uint64_t index_count = 0;
    std::uint64_t cluster_count = 0;
    std::uint64_t frame_count = 0;
    std::string vector_file = "vectors.f32";
    std::vector<ManifestRecord> records;
    std::vector<Cluster> clusters;  // centroids are not persisted

    nlohmann::json to_json() const;
    static MemoryManifest from_json(const nlohmann::json& j);
    /// Structural invariants (counts, linkage); empty when consistent.
    std::vector<std::string> check() const;
    bool operator==(const MemoryManifest&) const = default;
};

/// Immutable view of the store at one commit.
class Snapshot {
public:
    Snapshot() = default;

    std::uint64_t sequence() const noexcept;
    std::uint32_t dimension() const noexcept;
    std::size_t size() const noexcept;
    bool empty() const noexcept { return size() == 0; }

    /// Records ordered by index_id.
    std::vector<IndexId> index_ids() const;
    const IndexedFrame& record(IndexId id) const;
    const IndexedFrame* find_record(IndexId id) const;
    const Cluster& cluster(ClusterId id) const;
    const Cluster& cluster_of(IndexId id) const;
    std::size_t cluster_count() const noexcept;
    std::size_t frame_count() const noexcept;

    /// Exact cosine score for every indexed vector (optionally only those whose
    /// index frame timestamp is inside `range`), ordered by index_id.
    std::vector<ScoredIndex> similarity_search(const EmbeddingVector& query,
                                               std::optional<TimeRange> range = {}) const;

    /// Member frames of a cluster in frame_id order, pixel-exact.
    /// Throws std::out_of_range for unknown ids.
    std::vector<Frame> fetch_cluster_frames(ClusterId id) const;
    Frame fetch_frame(FrameId id) const;
    /// Timestamp of a stored frame; throws std::out_of_range if absent.
    double frame_timestamp(FrameId id) const;

    struct Data;

private:
    friend class MemoryStore;
    explicit Snapshot(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
    const Data& data() const;

    std::shared_ptr<const Data> data_;
};

struct InsertItem {
    IndexedFrame record;
    Cluster cluster;
    std::vector<FramePtr> raw_frames;
};

class MemoryStore {
public:
    /// Opens or creates a store under `root`. `durable` controls fsync.
    static std::unique_ptr<MemoryStore> open(const std::filesystem::path& root,
                                             std::uint32_t dimension, bool durable = true);
    /// Opens an existing store, taking the dimension from its manifest.
    static std::unique_ptr<MemoryStore> open_existing(const std::filesystem::path& root);
    /// Volatile store; raw frames are kept in memory.
    static std::unique_ptr<MemoryStore> in_memory(std::uint32_t dimension);

    ~MemoryStore();
    MemoryStore(const MemoryStore&) = delete;
    MemoryStore& operator=(const MemoryStore&) = delete;

    /// Atomically adds one index record, its cluster and the cluster's raw frames.
    /// Returns the new sequence number. On error the store is unchanged.
    std::uint64_t insert_indexed_frame(const IndexedFrame& record, const Cluster& cluster,
                                       const std::vector<FramePtr>& raw_frames);
    /// Same as above for several records in one commit.
    std::uint64_t insert_batch(const std::vector<InsertItem>& items);

    Snapshot open_snapshot() const;
    std::vector<Frame> fetch_cluster_frames(ClusterId id) const;
    MemoryManifest manifest() const;

    std::uint32_t dimension() const noexcept { return dimension_; }
    bool persistent() const noexcept { return !root_.empty(); }
    const std::filesystem::path& root() const noexcept { return root_; }

    static std::filesystem::path manifest_path(const std::filesystem::path& root);
    static std::filesystem::path vector_path(const std::filesystem::path& root);
    static std::filesystem::path frame_path(const std::filesystem::path& root, FrameId id);

private:
    MemoryStore(std::filesystem::path root, std::uint32_t dimension, bool durable,
                std::shared_ptr<RawLayer> raw);
    void load();
    void persist(const MemoryManifest& manifest, const std::vector<InsertItem>& items,
                 std::uint64_t first_vector);

    std::filesystem::path root_;
    std::uint32_t dimension_;
    bool durable_;
    std::shared_ptr<RawLayer> raw_;

    std::mutex writer_;
    mutable std::mutex publish_;
    std::shared_ptr<const Snapshot::Data> current_;
    std::shared_ptr<const MemoryManifest> manifest_;
};

}  // namespace venus
