#pragma once
// Analytic edge/cloud latency comparison and ingestion feasibility.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "venus/core_types.hpp"
#include "venus/embedding.hpp"
#include "venus/pipeline.hpp"
#include "venus/stream_source.hpp"

namespace venus {

struct ScenarioQuery {
    std::string text;
    double arrival_s = 0.0;
    std::optional<std::size_t> ground_truth_scene;
};

struct Scenario {
    StreamSourceSpec stream;
    std::vector<ScenarioQuery> queries;
    CostModel cost_model;
    /// Pipeline settings; the scenario's cost model replaces config.simulator.
    PipelineConfig config;

    /// {stream, queries, cost_model, config (optional)}. Throws std::invalid_argument.
    static Scenario from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

Scenario load_scenario(const std::filesystem::path& path);

/// One strategy over every scenario query. Means are over queries.
struct StrategyRow {
    Strategy strategy = Strategy::akr;
    std::size_t queries = 0;
    std::size_t total_frames_sent = 0;
    double total_bytes_sent = 0.0;
    double mean_frames_sent = 0.0;
    double mean_bytes_sent = 0.0;
    LatencyBreakdown mean_latency;
    double mean_distinct_clusters = 0.0;
    double mean_distinct_scenes = 0.0;
    /// Fraction of queries with a ground-truth scene whose keyframes touch it.
    std::optional<double> hit_rate;
    /// Device seconds spent indexing the stream, spread over the queries.
    /// Not part of mean_latency.
    double ingestion_amortized_s = 0.0;
    std::vector<QueryRecord> records;

    nlohmann::json to_json(bool with_records) const;
};

struct SimulationReport {
    std::size_t stream_frames = 0;
    IngestionReport ingestion;
    CostModel cost_model;
    std::vector<StrategyRow> rows;

    const StrategyRow& row(Strategy s) const;
    nlohmann::json to_json(bool with_records = false) const;
};

/// Ingests the scenario stream into an in-memory store, then runs every query
/// under each named strategy. Strategy names: venus_akr, venus_fixed, topk,
/// full_upload, uniform_sample. Throws std::invalid_argument on an unknown name
/// before doing any work.
SimulationReport simulate_strategies(const Scenario& scenario,
                                     const std::vector<std::string>& strategies,
                                     const Embedder& embedder, const AuxModels& aux);

/// Evenly spaced positions floor((i + 0.5) * total / n), i < min(n, total).
std::vector<std::size_t> uniform_positions(std::size_t total, std::size_t n);

struct FeasibilityRow {
    double fps = 0.0;
    double load = 0.0;                 // fps * per-frame device seconds
    double queue_growth_fps = 0.0;     // frames/s the backlog grows by, 0 when sustainable
    bool sustainable = false;
};

struct FeasibilityReport {
    double sparsification_ratio = 1.0;
    double per_frame_cost_s = 0.0;
    /// nullopt when the device cost is zero (every rate is sustainable).
    std::optional<double> max_sustainable_fps;
    std::vector<FeasibilityRow> rows;

    nlohmann::json to_json() const;
};

/// Per stream frame the device spends segment_cluster_latency_s plus
/// (aux_latency_s + embed_latency_s) / sparsification_ratio. A rate is
/// sustainable when fps times that cost is at most one.
/// sparsification_ratio = 1 embeds every frame.
FeasibilityReport check_realtime_feasibility(const std::vector<double>& fps_values,
                                             const CostModel& cost,
                                             double sparsification_ratio = 1.0);

/// lo, lo + step, ... up to hi (inclusive within 1e-9).
std::vector<double> fps_sweep(double lo, double hi, double step);

}  // namespace venus
