#pragma once
// Coarse temporal segmentation of a frame stream.
//
// Each frame is reduced to hue, saturation, lightness and edge-magnitude maps.
// The scene score of a frame is the weighted mean of the per-channel mean
// absolute differences against the previous frame. A partition closes when
// the score exceeds the threshold (the triggering frame opens the next
// partition) or when the open partition has spanned max_partition_duration.

#include <optional>
#include <vector>

#include "venus/core_types.hpp"

namespace venus {

/// Per-pixel channel maps, each value in [0,1], row-major.
struct ChannelMaps {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<double> hue;
    std::vector<double> saturation;
    std::vector<double> lightness;
    std::vector<double> edge;
};

/// HSL conversion plus a 3x3 gradient magnitude of the lightness channel,
/// normalized by the operator's largest possible response. Borders replicate
/// the edge pixel. Throws std::invalid_argument for zero-area frames.
ChannelMaps extract_channels(const Frame& frame, EdgeOperator op = EdgeOperator::sobel);

/// Circular distance on the unit hue circle, in [0, 0.5].
double hue_distance(double a, double b) noexcept;

struct SceneScore {
    double phi = 0.0;
    ChannelFeatures features;
};

/// Throws std::invalid_argument when the maps differ in size or the weights sum to zero.
SceneScore scene_score(const ChannelMaps& current, const ChannelMaps& previous,
                       const ChannelWeights& weights);

class SceneSegmenter {
public:
    explicit SceneSegmenter(SegmenterConfig config);

    /// Feeds the next frame. Returns the partition closed by this frame, if any.
    /// Throws std::invalid_argument if frame_id does not increase or the
    /// timestamp goes backwards.
    std::optional<ScenePartition> ingest(FramePtr frame);

    /// Closes and returns the open partition. Idempotent.
    std::optional<ScenePartition> flush();

    /// Score computed for the most recent frame (0 for the first frame of a stream).
    const SceneScore& last_score() const noexcept { return last_score_; }
    bool has_open_partition() const noexcept { return open_.has_value(); }
    const SegmenterConfig& config() const noexcept { return config_; }

private:
    ScenePartition close_open(CloseReason reason);

    SegmenterConfig config_;
    std::optional<ChannelMaps> previous_;
    std::optional<ScenePartition> open_;
    std::optional<FrameId> last_frame_id_;
    double last_timestamp_ = 0.0;
    double last_boundary_timestamp_ = 0.0;
    PartitionId next_partition_id_ = 0;
    SceneScore last_score_;
};

}  // namespace venus
