#pragma once
// Query-time keyframe selection.
//
// Similarity scores become a temperature softmax over index records. Frames
// are chosen by drawing index records from that distribution and then drawing
// member frames uniformly from each selected record's cluster, which keeps
// some probability on less relevant scenes. The adaptive variant draws one
// record at a time and stops once the distinct records drawn hold enough
// probability mass.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "venus/core_types.hpp"
#include "venus/memory_store.hpp"
#include "venus/rng.hpp"

namespace venus {

class EmptyMemoryError : public std::runtime_error {
public:
    EmptyMemoryError() : std::runtime_error("memory empty") {}
};

struct QueryDistribution {
    std::vector<IndexId> index_ids;
    std::vector<double> scores;
    std::vector<double> probabilities;
    double temperature = 1.0;

    std::size_t size() const noexcept { return index_ids.size(); }
    double max_probability() const;
    double probability_of(IndexId id) const;
};

/// Numerically stable softmax of score/temperature. Throws on an empty list or
/// a non-positive temperature.
QueryDistribution softmax_distribution(std::span<const ScoredIndex> scores, double temperature);

/// Inverse-CDF categorical sampler over a distribution's positions.
class CategoricalSampler {
public:
    explicit CategoricalSampler(const QueryDistribution& dist);
    std::size_t draw(rng::Engine& engine) const;

private:
    std::vector<double> cumulative_;
};

using DrawCounts = std::map<IndexId, std::uint32_t>;

/// `draws` independent categorical draws. Deterministic for a fixed seed.
DrawCounts sample_counts(const QueryDistribution& dist, std::uint32_t draws, std::uint64_t seed);

/// Lower bound on adaptive draws: beta * ceil(theta / max_p), rounded up to an integer.
std::uint32_t akr_min_draws(double max_probability, double theta, double beta);

struct AdaptiveDraws {
    DrawCounts counts;
    std::vector<IndexId> selected;  // distinct, ascending
    double cumulative_probability = 0.0;
    std::uint32_t draws = 0;
    std::uint32_t min_draws = 0;
    bool threshold_reached = false;
};

/// Progressive sampling: one draw at a time until (sum of distinct p)/beta >= theta
/// and at least min_draws have been made, or until n_max draws.
AdaptiveDraws adaptive_sample(const QueryDistribution& dist, double theta, double beta,
                              std::uint32_t n_max, std::uint64_t seed);

struct Keyframes {
    std::vector<FrameId> ids;
    std::vector<double> timestamps;
};

/// For each index id, min(count, |cluster|) distinct members chosen uniformly;
/// merged, deduplicated, sorted by (timestamp, frame_id).
/// Throws std::out_of_range for unknown index ids and StorageError for dangling links.
Keyframes draw_cluster_frames(const DrawCounts& counts, const Snapshot& snapshot,
                              std::uint64_t seed);

/// Fixed-budget sampling with config.n_fixed draws.
RetrievalResult retrieve_fixed(const EmbeddingVector& query, const Snapshot& snapshot,
                               const RetrievalConfig& config,
                               std::optional<TimeRange> range = {});

/// Adaptive keyframe retrieval bounded by config.n_max.
RetrievalResult retrieve_adaptive(const EmbeddingVector& query, const Snapshot& snapshot,
                                  const RetrievalConfig& config,
                                  std::optional<TimeRange> range = {});

/// Greedy baseline: the index frames of the k best scores (lower id on ties),
/// chronological. The distribution at `temperature` is reported for reference.
RetrievalResult retrieve_topk(const EmbeddingVector& query, const Snapshot& snapshot,
                              std::uint32_t k, double temperature = 1.0,
                              std::optional<TimeRange> range = {});

}  // namespace venus
