#pragma once
// Shared domain types for the ingestion and querying stages.
//
// Everything here is a plain value type. Frames are shared between stages
// through FramePtr (shared ownership of an immutable frame), every other
// record is copied.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace venus {

using FrameId = std::uint64_t;
using PartitionId = std::uint64_t;
using ClusterId = std::uint64_t;
using IndexId = std::uint64_t;

/// Thrown when persistent storage cannot be read or written.
class StorageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by HTTP backends after retries are exhausted.
class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& what, int attempts)
        : std::runtime_error(what + " (after " + std::to_string(attempts) + " attempts)"),
          attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

// ---------------------------------------------------------------------------
// Frames

/// A timestamped RGB image. pixels is row-major, 3 bytes per pixel.
struct Frame {
    FrameId frame_id = 0;
    double timestamp = 0.0;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;

    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width) * height;
    }
    bool valid() const noexcept {
        return width > 0 && height > 0 && pixels.size() == pixel_count() * 3;
    }
    bool operator==(const Frame&) const = default;
};

using FramePtr = std::shared_ptr<const Frame>;

/// Throws std::invalid_argument if the frame is zero-area or the buffer size is wrong.
void require_valid(const Frame& frame);

/// Per-channel mean absolute differences between two consecutive frames.
struct ChannelFeatures {
    double hue = 0.0;
    double saturation = 0.0;
    double lightness = 0.0;
    double edge = 0.0;

    bool valid() const noexcept;
    bool operator==(const ChannelFeatures&) const = default;
};

// ---------------------------------------------------------------------------
// Stage configuration

struct ChannelWeights {
    double hue = 1.0;
    double saturation = 1.0;
    double lightness = 1.0;
    double edge = 1.0;

    double l1() const noexcept { return hue + saturation + lightness + edge; }
    ChannelWeights scaled(double k) const noexcept {
        return {hue * k, saturation * k, lightness * k, edge * k};
    }
    bool operator==(const ChannelWeights&) const = default;
};

enum class EdgeOperator { sobel, prewitt };

struct SegmenterConfig {
    ChannelWeights weights;
    double scene_threshold = 0.15;
    double max_partition_duration = 30.0;
    EdgeOperator edge_operator = EdgeOperator::sobel;

    bool operator==(const SegmenterConfig&) const = default;
};

enum class CentroidMode { running_mean, first_frame };

struct ClustererConfig {
    /// L2 distance in the downscaled, [0,1]-scaled pixel space. Unset means
    /// 0.08 * sqrt(vector length).
    std::optional<double> distance_threshold;
    std::uint32_t downscale_edge = 64;
    CentroidMode centroid_mode = CentroidMode::running_mean;

    std::size_t vector_length() const noexcept {
        return static_cast<std::size_t>(downscale_edge) * downscale_edge * 3;
    }
    double effective_threshold() const;
    bool operator==(const ClustererConfig&) const = default;
};

enum class EmbedderBackend { mock, http };

struct EmbedderDescriptor {
    EmbedderBackend backend = EmbedderBackend::mock;
    std::uint32_t dimension = 256;
    std::string endpoint;
    double timeout_s = 10.0;
    int max_retries = 2;
    int max_in_flight = 4;
    /// Run the stub detector that labels each index frame with its dominant color.
    bool stub_aux_models = true;

    bool operator==(const EmbedderDescriptor&) const = default;
};

struct RetrievalConfig {
    double temperature = 1.0;
    double theta = 0.9;
    double beta = 1.0;
    std::uint32_t n_max = 32;
    /// Fixed budget; when set, adaptive retrieval is disabled.
    std::optional<std::uint32_t> n_fixed;
    std::uint64_t seed = 0;

    bool operator==(const RetrievalConfig&) const = default;
};

/// Analytic edge-cloud cost model.
struct CostModel {
    double bandwidth_bps = 100e6;
    double embed_latency_s = 0.0;
    double aux_latency_s = 0.0;
    double segment_cluster_latency_s = 0.0;
    double cloud_base_s = 0.0;
    double cloud_per_frame_s = 0.0;
    double frame_bytes = 100000.0;

    bool operator==(const CostModel&) const = default;
};

struct PipelineConfig {
    SegmenterConfig segmenter;
    ClustererConfig clusterer;
    EmbedderDescriptor embedding;
    RetrievalConfig retrieval;
    CostModel simulator;
    std::size_t queue_capacity = 64;

    bool operator==(const PipelineConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Ingestion products

enum class CloseReason { boundary, duration, end_of_stream };

struct ScenePartition {
    PartitionId partition_id = 0;
    std::vector<FramePtr> frames;
    double start = 0.0;
    double end = 0.0;
    bool closed = false;
    CloseReason reason = CloseReason::end_of_stream;
};

struct Cluster {
    ClusterId cluster_id = 0;
    PartitionId partition_id = 0;
    std::vector<FrameId> member_frame_ids;
    std::vector<double> member_timestamps;
    std::vector<float> centroid;
    std::optional<FrameId> index_frame_id;

    bool finalized() const noexcept { return index_frame_id.has_value(); }
    bool operator==(const Cluster&) const = default;
};

/// Unit-normalized embedding stored as 32-bit floats.
struct EmbeddingVector {
    std::vector<float> values;
    double norm = 0.0;

    std::size_t dimension() const noexcept { return values.size(); }

    /// Normalizes `raw` to unit length. A zero vector stays zero (norm 0).
    static EmbeddingVector normalized(const std::vector<double>& raw);
    /// Wraps already-normalized values, recomputing the cached norm.
    static EmbeddingVector from_values(std::vector<float> values);

    bool is_unit(double tolerance = 1e-6) const;
    bool operator==(const EmbeddingVector&) const = default;
};

/// Cosine of two vectors of the same dimension (dot product of the stored values
/// divided by their norms), accumulated in double.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct IndexedFrame {
    IndexId index_id = 0;
    FrameId frame_id = 0;
    ClusterId cluster_id = 0;
    double timestamp = 0.0;
    std::string aux_prompt;
    EmbeddingVector embedding;

    bool operator==(const IndexedFrame&) const = default;
};

// ---------------------------------------------------------------------------
// Query products

struct RetrievalResult {
    std::string strategy;
    std::vector<IndexId> selected_index_ids;
    std::map<IndexId, std::uint32_t> counts;
    std::vector<FrameId> keyframe_ids;
    std::vector<double> keyframe_timestamps;
    std::uint32_t draws = 0;
    double cumulative_probability = 0.0;
    std::vector<std::pair<IndexId, double>> plan_distribution;

    bool operator==(const RetrievalResult&) const = default;
};

/// Returns a list of violated invariants; empty when the result is consistent.
std::vector<std::string> check_invariants(const RetrievalResult& result);

struct LatencyBreakdown {
    double on_device_s = 0.0;
    double transmission_s = 0.0;
    double cloud_s = 0.0;
    double total_s = 0.0;

    static LatencyBreakdown make(double on_device_s, double transmission_s, double cloud_s);
    bool consistent(double tolerance = 1e-9) const;
    bool operator==(const LatencyBreakdown&) const = default;
};

const char* to_string(EdgeOperator op);
const char* to_string(CentroidMode mode);
const char* to_string(EmbedderBackend backend);
const char* to_string(CloseReason reason);

}  // namespace venus
