#include "venus/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <exception>
#include <thread>
#include <unordered_map>

#include "venus/bounded_queue.hpp"
#include "venus/frame_clusterer.hpp"
#include "venus/retrieval.hpp"
#include "venus/scene_segmenter.hpp"
#include "venus/serialization.hpp"

namespace venus {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Clustered {
    ScenePartition partition;
    std::vector<Cluster> clusters;
};

struct Embedded {
    PartitionSummary summary;
    std::vector<InsertItem> items;
};

// First failure wins; later ones are consequences of shutting the queues.
class FailureSlot {
public:
    void set(std::exception_ptr e) {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = std::move(e);
    }
    void rethrow_if_set() {
        std::lock_guard lock(mutex_);
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr error_;
};

[[noreturn]] void rethrow_with_context(const std::string& context) {
    try {
        throw;
    } catch (const StorageError& e) {
        throw StorageError(context + ": " + e.what());
    } catch (const TransportError& e) {
        throw TransportError(context + ": " + e.what(), e.attempts());
    } catch (const std::exception& e) {
        throw std::runtime_error(context + ": " + e.what());
    }
}

std::string frame_range(const ScenePartition& p) {
    if (p.frames.empty()) return "partition " + std::to_string(p.partition_id);
    return "partition " + std::to_string(p.partition_id) + " (frames " +
           std::to_string(p.frames.front()->frame_id) + ".." +
           std::to_string(p.frames.back()->frame_id) + ")";
}

}  // namespace

json IngestionReport::to_json(bool wall_clock) const {
    json parts = json::array();
    std::map<std::string, std::size_t> by_reason;
    for (const auto& p : partition_list) {
        parts.push_back({{"partition_id", p.partition_id},
                         {"start", p.start},
                         {"end", p.end},
                         {"frames", p.frames},
                         {"reason", to_string(p.reason)},
                         {"cluster_ids", p.cluster_ids}});
        ++by_reason[to_string(p.reason)];
    }
    json j = {{"frames", frames},
              {"partitions", partitions},
              {"partitions_by_reason", by_reason},
              {"clusters", clusters},
              {"indexed_frames", indexed_frames},
              {"clustered_frames", clustered_frames},
              {"sparsification_ratio", sparsification_ratio()},
              {"partition_list", parts}};
    if (wall_clock) {
        j["timings"] = {{"segment_s", segment_s},
                        {"cluster_s", cluster_s},
                        {"embed_s", embed_s},
                        {"store_s", store_s},
                        {"total_s", total_s},
                        {"max_queue_depth",
                         {{"partitions", max_partition_queue},
                          {"clustered", max_cluster_queue},
                          {"embedded", max_insert_queue}}}};
    }
    return j;
}

IngestionReport run_ingestion(FrameSource& source, MemoryStore& store,
                              const PipelineConfig& config, const Embedder& embedder,
                              const AuxModels& aux) {
    {
        const Snapshot existing = store.open_snapshot();
        if (!existing.empty() || existing.frame_count() > 0) {
            throw StorageError("memory already holds " + std::to_string(existing.size()) +
                               " index records; ingest into an empty root");
        }
    }
    if (embedder.dimension() != store.dimension()) {
        throw std::invalid_argument("embedder dimension " + std::to_string(embedder.dimension()) +
                                    " != store dimension " + std::to_string(store.dimension()));
    }

    const auto t_start = Clock::now();
    IngestionReport report;
    FailureSlot failure;
    BoundedQueue<ScenePartition> partitions(config.queue_capacity);
    BoundedQueue<Clustered> clustered(config.queue_capacity);
    BoundedQueue<Embedded> embedded(config.queue_capacity);
    auto abort_all = [&] {
        partitions.close();
        clustered.close();
        embedded.close();
    };

    std::thread cluster_stage([&] {
        ClusterId next_cluster = 0;
        try {
            while (auto p = partitions.pop()) {
                const auto t0 = Clock::now();
                Clustered out;
                try {
                    out.clusters = cluster_partition(*p, config.clusterer, next_cluster);
                } catch (...) {
                    rethrow_with_context(frame_range(*p));
                }
                next_cluster += out.clusters.size();
                out.partition = std::move(*p);
                report.cluster_s += seconds_since(t0);
                if (!clustered.push(std::move(out))) break;
            }
        } catch (...) {
            failure.set(std::current_exception());
            abort_all();
        }
        clustered.close();
    });

    std::thread embed_stage([&] {
        IndexId next_index = 0;
        try {
            while (auto c = clustered.pop()) {
                const auto t0 = Clock::now();
                std::unordered_map<FrameId, FramePtr> by_id;
                for (const FramePtr& f : c->partition.frames) by_id.emplace(f->frame_id, f);

                Embedded out;
                out.summary.partition_id = c->partition.partition_id;
                out.summary.start = c->partition.start;
                out.summary.end = c->partition.end;
                out.summary.frames = c->partition.frames.size();
                out.summary.reason = c->partition.reason;
                for (Cluster& cl : c->clusters) {
                    const FrameId key = *cl.index_frame_id;
                    InsertItem item;
                    try {
                        const Frame& key_frame = *by_id.at(key);
                        const auto detections = aux.run(key_frame);
                        item.record.aux_prompt = build_aux_prompt(detections);
                        item.record.embedding = embedder.embed_image(key_frame, item.record.aux_prompt);
                        item.record.timestamp = key_frame.timestamp;
                    } catch (...) {
                        rethrow_with_context("frame " + std::to_string(key));
                    }
                    item.record.index_id = next_index++;
                    item.record.frame_id = key;
                    item.record.cluster_id = cl.cluster_id;
                    for (FrameId id : cl.member_frame_ids) item.raw_frames.push_back(by_id.at(id));
                    out.summary.cluster_ids.push_back(cl.cluster_id);
                    cl.centroid.clear();
                    item.cluster = std::move(cl);
                    out.items.push_back(std::move(item));
                }
                report.embed_s += seconds_since(t0);
                if (!embedded.push(std::move(out))) break;
            }
        } catch (...) {
            failure.set(std::current_exception());
            abort_all();
        }
        embedded.close();
    });

    std::thread store_stage([&] {
        try {
            while (auto e = embedded.pop()) {
                const auto t0 = Clock::now();
                try {
                    store.insert_batch(e->items);
                } catch (...) {
                    rethrow_with_context("partition " + std::to_string(e->summary.partition_id));
                }
                for (const auto& item : e->items) {
                    report.clustered_frames += item.cluster.member_frame_ids.size();
                }
                report.clusters += e->items.size();
                report.indexed_frames += e->items.size();
                ++report.partitions;
                report.partition_list.push_back(std::move(e->summary));
                report.store_s += seconds_since(t0);
            }
        } catch (...) {
            failure.set(std::current_exception());
            abort_all();
        }
    });

    // Segmentation runs on the calling thread.
    try {
        SceneSegmenter segmenter(config.segmenter);
        while (true) {
            const auto t0 = Clock::now();
            FramePtr frame;
            std::optional<ScenePartition> closed;
            try {
                frame = source.next();
                if (!frame) {
                    closed = segmenter.flush();
                } else {
                    ++report.frames;
                    closed = segmenter.ingest(frame);
                }
            } catch (...) {
                rethrow_with_context(frame ? "frame " + std::to_string(frame->frame_id)
                                           : "frame " + std::to_string(report.frames));
            }
            report.segment_s += seconds_since(t0);
            if (closed && !partitions.push(std::move(*closed))) break;
            if (!frame) break;
        }
    } catch (...) {
        failure.set(std::current_exception());
        abort_all();
    }
    partitions.close();

    cluster_stage.join();
    embed_stage.join();
    store_stage.join();
    failure.rethrow_if_set();

    report.max_partition_queue = partitions.max_depth();
    report.max_cluster_queue = clustered.max_depth();
    report.max_insert_queue = embedded.max_depth();
    report.total_s = seconds_since(t_start);
    if (report.clustered_frames != report.frames) {
        throw std::logic_error("ingestion lost frames: " + std::to_string(report.frames) +
                               " read, " + std::to_string(report.clustered_frames) + " clustered");
    }
    return report;
}

// ---------------------------------------------------------------------------
// Querying

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::akr: return "venus_akr";
        case Strategy::fixed: return "venus_fixed";
        case Strategy::topk: return "topk";
        case Strategy::full_upload: return "full_upload";
        case Strategy::uniform_sample: return "uniform_sample";
    }
    return "?";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "akr" || name == "venus_akr") return Strategy::akr;
    if (name == "fixed" || name == "venus_fixed") return Strategy::fixed;
    if (name == "topk") return Strategy::topk;
    if (name == "full_upload") return Strategy::full_upload;
    if (name == "uniform_sample" || name == "uniform") return Strategy::uniform_sample;
    throw std::invalid_argument("unknown strategy '" + name + "'");
}

json QueryRecord::to_json() const {
    json j = {{"query", query},
              {"arrival_s", arrival_s},
              {"strategy", venus::to_string(strategy)},
              {"seed", seed},
              {"retrieval", result},
              {"latency", latency},
              {"answer", answer ? json(*answer) : json(nullptr)},
              {"reasoner_error", reasoner_error ? json(*reasoner_error) : json(nullptr)}};
    return j;
}

std::uint32_t fixed_budget(const RetrievalConfig& config) {
    return config.n_fixed.value_or(config.n_max);
}

double transmission_seconds(double frames, const CostModel& cost) {
    return frames * cost.frame_bytes * 8.0 / cost.bandwidth_bps;
}

std::uint32_t budget_for_delay(double max_delay_s, const CostModel& cost) {
    if (!(max_delay_s >= 0.0)) throw std::invalid_argument("delay budget must be non-negative");
    const double per_frame = transmission_seconds(1.0, cost);
    if (per_frame <= 0.0) return std::numeric_limits<std::uint32_t>::max();
    const double n = std::floor(max_delay_s / per_frame + 1e-9);
    if (n >= static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
        return std::numeric_limits<std::uint32_t>::max();
    }
    return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(n));
}

LatencyBreakdown query_latency(std::size_t frames_sent, bool on_device_embedding,
                               const CostModel& cost) {
    const double n = static_cast<double>(frames_sent);
    return LatencyBreakdown::make(on_device_embedding ? cost.embed_latency_s : 0.0,
                                  transmission_seconds(n, cost),
                                  cost.cloud_base_s + cost.cloud_per_frame_s * n);
}

QueryRecord run_query(const std::string& query, const Snapshot& snapshot,
                      const Embedder& embedder, const PipelineConfig& config, Strategy strategy,
                      Reasoner* reasoner, double arrival_s, std::optional<TimeRange> range) {
    if (snapshot.empty()) throw EmptyMemoryError();
    QueryRecord rec;
    rec.query = query;
    rec.arrival_s = arrival_s;
    rec.strategy = strategy;
    rec.seed = config.retrieval.seed;

    const EmbeddingVector q = embedder.embed_text(query);
    switch (strategy) {
        case Strategy::akr:
            rec.result = retrieve_adaptive(q, snapshot, config.retrieval, range);
            break;
        case Strategy::fixed: {
            RetrievalConfig rc = config.retrieval;
            rc.n_fixed = fixed_budget(rc);
            rec.result = retrieve_fixed(q, snapshot, rc, range);
            break;
        }
        case Strategy::topk:
            rec.result = retrieve_topk(q, snapshot, fixed_budget(config.retrieval),
                                       config.retrieval.temperature, range);
            break;
        default:
            throw std::invalid_argument(std::string("run_query: strategy ") + to_string(strategy) +
                                        " does not query the memory");
    }
    rec.latency = query_latency(rec.result.keyframe_ids.size(), true, config.simulator);

    if (reasoner) {
        try {
            std::vector<Frame> frames;
            frames.reserve(rec.result.keyframe_ids.size());
            for (FrameId id : rec.result.keyframe_ids) frames.push_back(snapshot.fetch_frame(id));
            rec.answer = reasoner->reason(query, frames);
        } catch (const std::exception& e) {
            rec.reasoner_error = e.what();
        }
    }
    return rec;
}

}  // namespace venus
