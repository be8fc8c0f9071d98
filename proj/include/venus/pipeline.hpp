#pragma once
// Ingestion and query orchestration.
//
// Ingestion runs four stages on their own threads, connected by bounded
// queues: segment -> cluster -> aux models + embedding -> memory insert.
// Each stage is single-threaded and FIFO, so ids and output are identical
// from run to run regardless of scheduling.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "venus/core_types.hpp"
#include "venus/embedding.hpp"
#include "venus/memory_store.hpp"
#include "venus/reasoner.hpp"
#include "venus/stream_source.hpp"

namespace venus {

struct PartitionSummary {
    PartitionId partition_id = 0;
    double start = 0.0;
    double end = 0.0;
    std::size_t frames = 0;
    CloseReason reason = CloseReason::end_of_stream;
    std::vector<ClusterId> cluster_ids;
};

struct IngestionReport {
    std::size_t frames = 0;
    std::size_t partitions = 0;
    std::size_t clusters = 0;
    std::size_t indexed_frames = 0;
    std::size_t clustered_frames = 0;  // sum of cluster sizes
    std::vector<PartitionSummary> partition_list;

    // Wall-clock and scheduling-dependent fields.
    double segment_s = 0.0;
    double cluster_s = 0.0;
    double embed_s = 0.0;
    double store_s = 0.0;
    double total_s = 0.0;
    std::size_t max_partition_queue = 0;
    std::size_t max_cluster_queue = 0;
    std::size_t max_insert_queue = 0;

    /// Stream frames per index frame (0 when nothing was indexed).
    double sparsification_ratio() const noexcept {
        return indexed_frames ? static_cast<double>(frames) / static_cast<double>(indexed_frames)
                              : 0.0;
    }
    /// Deterministic fields only, unless `wall_clock` is set (adds a "timings" object).
    nlohmann::json to_json(bool wall_clock = false) const;
};

/// Streams every frame of `source` into `store`. Throws with the frame id in
/// flight when a stage fails; the store keeps whatever was committed before.
IngestionReport run_ingestion(FrameSource& source, MemoryStore& store,
                              const PipelineConfig& config, const Embedder& embedder,
                              const AuxModels& aux);

enum class Strategy { akr, fixed, topk, full_upload, uniform_sample };

const char* to_string(Strategy s);
/// Accepts both short ("akr") and long ("venus_akr") names. Throws std::invalid_argument.
Strategy parse_strategy(const std::string& name);

struct QueryRecord {
    std::string query;
    double arrival_s = 0.0;
    Strategy strategy = Strategy::akr;
    std::uint64_t seed = 0;
    RetrievalResult result;
    LatencyBreakdown latency;
    std::optional<std::string> answer;
    std::optional<std::string> reasoner_error;

    nlohmann::json to_json() const;
};

/// Frames a non-adaptive strategy sends: n_fixed, or n_max when unset.
std::uint32_t fixed_budget(const RetrievalConfig& config);

/// Seconds to ship `frames` keyframes: frames * frame_bytes * 8 / bandwidth.
double transmission_seconds(double frames, const CostModel& cost);

/// Largest keyframe budget whose transmission fits in `max_delay_s` (at least 1).
std::uint32_t budget_for_delay(double max_delay_s, const CostModel& cost);

/// Per-query cost: the query embedding runs on the device, keyframes cross the
/// network, and the cloud model costs cloud_base_s + cloud_per_frame_s * frames.
LatencyBreakdown query_latency(std::size_t frames_sent, bool on_device_embedding,
                               const CostModel& cost);

/// Embeds the query, retrieves keyframes with an akr/fixed/topk strategy,
/// prices the query and (if given) asks the reasoner. Reasoner failures are
/// recorded in the result rather than thrown. `range` restricts candidates to
/// index frames whose timestamp lies inside it.
QueryRecord run_query(const std::string& query, const Snapshot& snapshot,
                      const Embedder& embedder, const PipelineConfig& config, Strategy strategy,
                      Reasoner* reasoner, double arrival_s = 0.0,
                      std::optional<TimeRange> range = {});

}  // namespace venus
