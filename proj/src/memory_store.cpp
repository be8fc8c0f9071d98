#include "venus/memory_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include <fcntl.h>
#include <unistd.h>

#include "venus/image_io.hpp"
#include "venus/serialization.hpp"

namespace venus {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "vectors.f32 is written in host order; add byte swapping for big-endian hosts");

struct Snapshot::Data {
    std::uint64_t sequence = 0;
    std::uint32_t dimension = 0;
    std::map<IndexId, std::shared_ptr<const IndexedFrame>> records;
    std::map<ClusterId, std::shared_ptr<const Cluster>> clusters;
    std::map<FrameId, double> frame_timestamps;
    std::shared_ptr<const RawLayer> raw;
};

// ---------------------------------------------------------------------------
// Raw layers

namespace {

class MemoryRawLayer final : public RawLayer {
public:
    void put(const Frame& frame) override {
        std::unique_lock lock(mutex_);
        frames_[frame.frame_id] = std::make_shared<const Frame>(frame);
    }
    Frame get(FrameId id) const override {
        std::shared_lock lock(mutex_);
        auto it = frames_.find(id);
        if (it == frames_.end()) throw StorageError("raw frame " + std::to_string(id) + " missing");
        return *it->second;
    }

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<FrameId, FramePtr> frames_;
};

class DiskRawLayer final : public RawLayer {
public:
    explicit DiskRawLayer(fs::path root, bool durable) : root_(std::move(root)), durable_(durable) {}

    void put(const Frame& frame) override {
        const fs::path path = MemoryStore::frame_path(root_, frame.frame_id);
        if (durable_) {
            image::write_png(path, frame);
        } else {
            const auto bytes = image::encode_png(frame);
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out.write(reinterpret_cast<const char*>(bytes.data()),
                      static_cast<std::streamsize>(bytes.size()));
            if (!out) throw StorageError("cannot write " + path.string());
        }
    }
    Frame get(FrameId id) const override {
        return image::decode_png(image::read_file(MemoryStore::frame_path(root_, id)));
    }

private:
    fs::path root_;
    bool durable_;
};

void sync_directory(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

json MemoryManifest::to_json() const {
    json recs = json::array();
    for (const auto& r : records) {
        recs.push_back({{"index_id", r.index_id},
                        {"frame_id", r.frame_id},
                        {"cluster_id", r.cluster_id},
                        {"timestamp", r.timestamp},
                        {"aux_prompt", r.aux_prompt}});
    }
    json cls = json::array();
    for (Cluster c : clusters) {
        c.centroid.clear();
        cls.push_back(c);
    }
    return {{"version", version},           {"dimension", dimension},
            {"sequence", sequence},         {"index_count", index_count},
            {"cluster_count", cluster_count}, {"frame_count", frame_count},
            {"vector_file", vector_file},   {"records", recs},
            {"clusters", cls}};
}

MemoryManifest MemoryManifest::from_json(const json& j) {
    MemoryManifest m;
    j.at("version").get_to(m.version);
    if (m.version != kManifestVersion) {
        throw StorageError("unsupported manifest version " + std::to_string(m.version));
    }
    j.at("dimension").get_to(m.dimension);
    j.at("sequence").get_to(m.sequence);
    j.at("index_count").get_to(m.index_count);
    j.at("cluster_count").get_to(m.cluster_count);
    j.at("frame_count").get_to(m.frame_count);
    j.at("vector_file").get_to(m.vector_file);
    for (const auto& r : j.at("records")) {
        ManifestRecord rec;
        r.at("index_id").get_to(rec.index_id);
        r.at("frame_id").get_to(rec.frame_id);
        r.at("cluster_id").get_to(rec.cluster_id);
        r.at("timestamp").get_to(rec.timestamp);
        r.at("aux_prompt").get_to(rec.aux_prompt);
        m.records.push_back(std::move(rec));
    }
    j.at("clusters").get_to(m.clusters);
    return m;
}

std::vector<std::string> MemoryManifest::check() const {
    std::vector<std::string> problems;
    if (index_count != records.size()) problems.push_back("index_count != number of records");
    if (cluster_count != clusters.size()) problems.push_back("cluster_count != number of clusters");
    std::map<ClusterId, const Cluster*> by_id;
    std::uint64_t frames = 0;
    for (const auto& c : clusters) {
        by_id[c.cluster_id] = &c;
        frames += c.member_frame_ids.size();
    }
    if (frames != frame_count) problems.push_back("frame_count != total cluster members");
    std::set<ClusterId> linked;
    for (const auto& r : records) {
        auto it = by_id.find(r.cluster_id);
        if (it == by_id.end()) {
            problems.push_back("record " + std::to_string(r.index_id) + " links to unknown cluster");
            continue;
        }
        if (it->second->index_frame_id != r.frame_id) {
            problems.push_back("record " + std::to_string(r.index_id) +
                               " is not its cluster's index frame");
        }
        if (!linked.insert(r.cluster_id).second) {
            problems.push_back("cluster " + std::to_string(r.cluster_id) + " has two records");
        }
    }
    if (linked.size() != clusters.size()) problems.push_back("cluster without an index record");
    return problems;
}

// ---------------------------------------------------------------------------
// Snapshot

const Snapshot::Data& Snapshot::data() const {
    static const Data empty;
    return data_ ? *data_ : empty;
}

std::uint64_t Snapshot::sequence() const noexcept { return data_ ? data_->sequence : 0; }
std::uint32_t Snapshot::dimension() const noexcept { return data_ ? data_->dimension : 0; }
std::size_t Snapshot::size() const noexcept { return data_ ? data_->records.size() : 0; }
std::size_t Snapshot::cluster_count() const noexcept { return data_ ? data_->clusters.size() : 0; }
std::size_t Snapshot::frame_count() const noexcept {
    return data_ ? data_->frame_timestamps.size() : 0;
}

std::vector<IndexId> Snapshot::index_ids() const {
    std::vector<IndexId> ids;
    ids.reserve(size());
    for (const auto& [id, _] : data().records) ids.push_back(id);
    return ids;
}

const IndexedFrame* Snapshot::find_record(IndexId id) const {
    const auto& recs = data().records;
    auto it = recs.find(id);
    return it == recs.end() ? nullptr : it->second.get();
}

const IndexedFrame& Snapshot::record(IndexId id) const {
    if (const IndexedFrame* r = find_record(id)) return *r;
    throw std::out_of_range("unknown index id " + std::to_string(id));
}

const Cluster& Snapshot::cluster(ClusterId id) const {
    const auto& cls = data().clusters;
    auto it = cls.find(id);
    if (it == cls.end()) throw std::out_of_range("unknown cluster id " + std::to_string(id));
    return *it->second;
}

const Cluster& Snapshot::cluster_of(IndexId id) const {
    const IndexedFrame& r = record(id);
    const auto& cls = data().clusters;
    auto it = cls.find(r.cluster_id);
    if (it == cls.end()) {
        throw StorageError("index " + std::to_string(id) + " links to missing cluster " +
                           std::to_string(r.cluster_id));
    }
    return *it->second;
}

std::vector<ScoredIndex> Snapshot::similarity_search(const EmbeddingVector& query,
                                                     std::optional<TimeRange> range) const {
    std::vector<ScoredIndex> out;
    if (empty()) return out;
    if (query.dimension() != dimension()) {
        throw std::invalid_argument("similarity_search: query dimension " +
                                    std::to_string(query.dimension()) + " != store dimension " +
                                    std::to_string(dimension()));
    }
    out.reserve(size());
    for (const auto& [id, rec] : data().records) {
        if (range && !range->contains(rec->timestamp)) continue;
        out.push_back({id, cosine(query, rec->embedding)});
    }
    return out;
}

double Snapshot::frame_timestamp(FrameId id) const {
    const auto& ts = data().frame_timestamps;
    auto it = ts.find(id);
    if (it == ts.end()) throw std::out_of_range("unknown frame id " + std::to_string(id));
    return it->second;
}

Frame Snapshot::fetch_frame(FrameId id) const {
    const double t = frame_timestamp(id);
    Frame f = data().raw->get(id);
    f.frame_id = id;
    f.timestamp = t;
    return f;
}

std::vector<Frame> Snapshot::fetch_cluster_frames(ClusterId id) const {
    const Cluster& c = cluster(id);
    std::vector<Frame> frames;
    frames.reserve(c.member_frame_ids.size());
    for (std::size_t i = 0; i < c.member_frame_ids.size(); ++i) {
        Frame f = data().raw->get(c.member_frame_ids[i]);
        f.frame_id = c.member_frame_ids[i];
        f.timestamp = c.member_timestamps[i];
        frames.push_back(std::move(f));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Store

fs::path MemoryStore::manifest_path(const fs::path& root) { return root / "manifest.json"; }
fs::path MemoryStore::vector_path(const fs::path& root) { return root / "vectors.f32"; }
fs::path MemoryStore::frame_path(const fs::path& root, FrameId id) {
    return root / "frames" / (std::to_string(id) + ".png");
}

MemoryStore::MemoryStore(fs::path root, std::uint32_t dimension, bool durable,
                         std::shared_ptr<RawLayer> raw)
    : root_(std::move(root)), dimension_(dimension), durable_(durable), raw_(std::move(raw)) {
    auto data = std::make_shared<Snapshot::Data>();
    data->dimension = dimension_;
    data->raw = raw_;
    current_ = std::move(data);
    auto m = std::make_shared<MemoryManifest>();
    m->dimension = dimension_;
    manifest_ = std::move(m);
}

MemoryStore::~MemoryStore() = default;

std::unique_ptr<MemoryStore> MemoryStore::in_memory(std::uint32_t dimension) {
    if (dimension == 0) throw std::invalid_argument("memory store: dimension must be positive");
    return std::unique_ptr<MemoryStore>(
        new MemoryStore({}, dimension, false, std::make_shared<MemoryRawLayer>()));
}

std::unique_ptr<MemoryStore> MemoryStore::open(const fs::path& root, std::uint32_t dimension,
                                               bool durable) {
    if (root.empty()) throw std::invalid_argument("memory store: empty root path");
    std::error_code ec;
    fs::create_directories(root / "frames", ec);
    if (ec) throw StorageError("cannot create " + (root / "frames").string() + ": " + ec.message());

    if (fs::exists(manifest_path(root))) {
        auto store = open_existing(root);
        if (store->dimension() != dimension) {
            throw StorageError("store at " + root.string() + " has dimension " +
                               std::to_string(store->dimension()) + ", requested " +
                               std::to_string(dimension));
        }
        store->durable_ = durable;
        return store;
    }
    if (dimension == 0) throw std::invalid_argument("memory store: dimension must be positive");
    auto store = std::unique_ptr<MemoryStore>(new MemoryStore(
        root, dimension, durable, std::make_shared<DiskRawLayer>(root, durable)));
    // An empty manifest makes the store reopenable before the first insert.
    store->persist(*store->manifest_, {}, 0);
    return store;
}

std::unique_ptr<MemoryStore> MemoryStore::open_existing(const fs::path& root) {
    const auto bytes = image::read_file(manifest_path(root));
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw StorageError("corrupt manifest in " + root.string() + ": " + e.what());
    }
    const MemoryManifest m = MemoryManifest::from_json(j);
    auto store = std::unique_ptr<MemoryStore>(
        new MemoryStore(root, m.dimension, true, std::make_shared<DiskRawLayer>(root, true)));
    store->load();
    return store;
}

void MemoryStore::load() {
    const auto bytes = image::read_file(manifest_path(root_));
    const MemoryManifest m = MemoryManifest::from_json(json::parse(bytes.begin(), bytes.end()));
    if (auto problems = m.check(); !problems.empty()) {
        throw StorageError("inconsistent manifest in " + root_.string() + ": " + problems.front());
    }

    const fs::path vpath = root_ / m.vector_file;
    const std::uint64_t record_bytes = static_cast<std::uint64_t>(m.dimension) * sizeof(float);
    const std::uint64_t expected = m.index_count * record_bytes;
    const std::uint64_t actual = fs::exists(vpath) ? fs::file_size(vpath) : 0;
    if (actual < expected) {
        throw StorageError("vector file " + vpath.string() + " holds " + std::to_string(actual) +
                           " bytes, manifest needs " + std::to_string(expected));
    }
    if (actual > expected) {
        // Torn tail from an interrupted insert.
        fs::resize_file(vpath, expected);
    }

    std::vector<float> vectors(m.index_count * m.dimension);
    if (expected > 0) {
        std::ifstream in(vpath, std::ios::binary);
        in.read(reinterpret_cast<char*>(vectors.data()), static_cast<std::streamsize>(expected));
        if (!in) throw StorageError("short read from " + vpath.string());
    }

    auto data = std::make_shared<Snapshot::Data>();
    data->sequence = m.sequence;
    data->dimension = m.dimension;
    data->raw = raw_;
    for (const Cluster& c : m.clusters) {
        for (std::size_t i = 0; i < c.member_frame_ids.size(); ++i) {
            data->frame_timestamps[c.member_frame_ids[i]] = c.member_timestamps[i];
        }
        data->clusters[c.cluster_id] = std::make_shared<const Cluster>(c);
    }
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        const ManifestRecord& r = m.records[i];
        auto rec = std::make_shared<IndexedFrame>();
        rec->index_id = r.index_id;
        rec->frame_id = r.frame_id;
        rec->cluster_id = r.cluster_id;
        rec->timestamp = r.timestamp;
        rec->aux_prompt = r.aux_prompt;
        const float* v = &vectors[i * m.dimension];
        rec->embedding = EmbeddingVector::from_values(std::vector<float>(v, v + m.dimension));
        data->records[r.index_id] = std::move(rec);
    }
    std::lock_guard lock(publish_);
    current_ = std::move(data);
    manifest_ = std::make_shared<const MemoryManifest>(m);
}

std::uint64_t MemoryStore::insert_indexed_frame(const IndexedFrame& record, const Cluster& cluster,
                                                const std::vector<FramePtr>& raw_frames) {
    return insert_batch({InsertItem{record, cluster, raw_frames}});
}

std::uint64_t MemoryStore::insert_batch(const std::vector<InsertItem>& items) {
    std::lock_guard writer(writer_);
    std::shared_ptr<const Snapshot::Data> base;
    std::shared_ptr<const MemoryManifest> base_manifest;
    {
        std::lock_guard lock(publish_);
        base = current_;
        base_manifest = manifest_;
    }

    // Validate everything before touching storage.
    std::set<IndexId> new_ids;
    std::set<ClusterId> new_clusters;
    std::set<FrameId> new_frames;
    for (const auto& item : items) {
        const IndexedFrame& r = item.record;
        const Cluster& c = item.cluster;
        const std::string tag = "insert index " + std::to_string(r.index_id) + ": ";
        if (r.embedding.dimension() != dimension_) {
            throw std::invalid_argument(tag + "dimension mismatch (" +
                                        std::to_string(r.embedding.dimension()) + " vs " +
                                        std::to_string(dimension_) + ")");
        }
        if (base->records.count(r.index_id) || !new_ids.insert(r.index_id).second) {
            throw std::invalid_argument(tag + "duplicate index_id");
        }
        if (!c.finalized() || c.member_frame_ids.empty()) {
            throw std::invalid_argument(tag + "cluster is not finalized");
        }
        if (c.cluster_id != r.cluster_id || *c.index_frame_id != r.frame_id) {
            throw std::invalid_argument(tag + "record does not link to its cluster's index frame");
        }
        if (base->clusters.count(c.cluster_id) || !new_clusters.insert(c.cluster_id).second) {
            throw std::invalid_argument(tag + "duplicate cluster_id " + std::to_string(c.cluster_id));
        }
        if (c.member_timestamps.size() != c.member_frame_ids.size() ||
            !std::is_sorted(c.member_frame_ids.begin(), c.member_frame_ids.end())) {
            throw std::invalid_argument(tag + "cluster members must be sorted with timestamps");
        }
        if (item.raw_frames.size() != c.member_frame_ids.size()) {
            throw std::invalid_argument(tag + "raw frames do not match cluster members");
        }
        for (std::size_t i = 0; i < item.raw_frames.size(); ++i) {
            const FramePtr& f = item.raw_frames[i];
            if (!f || f->frame_id != c.member_frame_ids[i] || !f->valid()) {
                throw std::invalid_argument(tag + "raw frames do not match cluster members");
            }
            if (base->frame_timestamps.count(f->frame_id) || !new_frames.insert(f->frame_id).second) {
                throw std::invalid_argument(tag + "frame " + std::to_string(f->frame_id) +
                                            " already stored");
            }
        }
    }

    // Raw layer first: frames stay invisible until the manifest references them.
    for (const auto& item : items) {
        for (const FramePtr& f : item.raw_frames) raw_->put(*f);
    }

    auto next = std::make_shared<Snapshot::Data>(*base);
    next->sequence = base->sequence + 1;
    for (const auto& item : items) {
        next->records[item.record.index_id] = std::make_shared<const IndexedFrame>(item.record);
        Cluster c = item.cluster;
        c.centroid.clear();
        c.centroid.shrink_to_fit();
        next->clusters[c.cluster_id] = std::make_shared<const Cluster>(std::move(c));
        for (const FramePtr& f : item.raw_frames) next->frame_timestamps[f->frame_id] = f->timestamp;
    }

    // Records keep insertion order, which is also the vector file order.
    auto manifest = std::make_shared<MemoryManifest>(*base_manifest);
    manifest->sequence = next->sequence;
    for (const auto& item : items) {
        const IndexedFrame& r = item.record;
        manifest->records.push_back({r.index_id, r.frame_id, r.cluster_id, r.timestamp, r.aux_prompt});
        Cluster c = item.cluster;
        c.centroid.clear();
        manifest->clusters.push_back(std::move(c));
        manifest->frame_count += item.cluster.member_frame_ids.size();
    }
    manifest->index_count = manifest->records.size();
    manifest->cluster_count = manifest->clusters.size();

    if (persistent()) persist(*manifest, items, base->records.size());

    std::lock_guard lock(publish_);
    current_ = std::move(next);
    manifest_ = std::move(manifest);
    return current_->sequence;
}

void MemoryStore::persist(const MemoryManifest& m, const std::vector<InsertItem>& items,
                          std::uint64_t first_vector) {
    // Vectors are appended in insertion order; manifest records follow the same order.
    const fs::path vpath = vector_path(root_);
    const int fd = ::open(vpath.c_str(), O_WRONLY | O_CREAT, 0644);
    if (fd < 0) throw StorageError("cannot open " + vpath.string() + ": " + std::strerror(errno));
    const std::size_t record_bytes = static_cast<std::size_t>(dimension_) * sizeof(float);
    off_t offset = static_cast<off_t>(first_vector * record_bytes);
    for (const auto& item : items) {
        const auto* src = reinterpret_cast<const char*>(item.record.embedding.values.data());
        std::size_t done = 0;
        while (done < record_bytes) {
            const ssize_t n = ::pwrite(fd, src + done, record_bytes - done, offset);
            if (n < 0) {
                if (errno == EINTR) continue;
                const std::string why = std::strerror(errno);
                ::close(fd);
                throw StorageError("write " + vpath.string() + ": " + why);
            }
            done += static_cast<std::size_t>(n);
            offset += n;
        }
    }
    if (durable_) ::fsync(fd);
    ::close(fd);

    const std::string text = m.to_json().dump(2) + "\n";
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(text.data()),
                                              text.size());
    if (durable_) {
        image::write_file_atomic(manifest_path(root_), bytes);
        sync_directory(root_);
    } else {
        const fs::path tmp = manifest_path(root_).string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out.write(text.data(), static_cast<std::streamsize>(text.size()));
            if (!out) throw StorageError("cannot write " + tmp.string());
        }
        fs::rename(tmp, manifest_path(root_));
    }
}

Snapshot MemoryStore::open_snapshot() const {
    std::lock_guard lock(publish_);
    return Snapshot(current_);
}

std::vector<Frame> MemoryStore::fetch_cluster_frames(ClusterId id) const {
    return open_snapshot().fetch_cluster_frames(id);
}

MemoryManifest MemoryStore::manifest() const {
    std::lock_guard lock(publish_);
    return *manifest_;
}

}  // namespace venus
