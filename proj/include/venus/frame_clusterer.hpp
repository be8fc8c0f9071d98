#pragma once
// Incremental clustering of the frames in one closed scene partition.

#include <span>
#include <vector>

#include "venus/core_types.hpp"

namespace venus {

/// Area-average resize to edge x edge, channels scaled to [0,1], flattened
/// row-major as (r, g, b) triples. Works for both down- and upscaling.
std::vector<float> flatten(const Frame& frame, std::uint32_t edge);

/// Euclidean distance between a flattened frame and a centroid.
double l2_distance(std::span<const float> a, std::span<const double> b);

/// Clusters a closed, non-empty partition in frame order.
///
/// A frame joins the nearest existing centroid (lowest cluster id on ties)
/// when that distance is <= the threshold, otherwise it seeds a new cluster.
/// In running_mean mode the centroid tracks the mean of its members. Each
/// cluster's index frame is the member nearest the final centroid, earliest
/// frame id on ties. Cluster ids are assigned sequentially from first_id.
///
/// A threshold of 0 is accepted here (every distinct frame gets its own
/// cluster); configuration validation is stricter.
std::vector<Cluster> cluster_partition(const ScenePartition& partition,
                                       const ClustererConfig& config, ClusterId first_id = 0);

}  // namespace venus
