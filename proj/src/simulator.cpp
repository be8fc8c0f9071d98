#include "venus/simulator.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "venus/config.hpp"
#include "venus/memory_store.hpp"
#include "venus/retrieval.hpp"
#include "venus/rng.hpp"
#include "venus/serialization.hpp"

namespace venus {

using nlohmann::json;

Scenario Scenario::from_json(const json& j) {
    Scenario s;
    try {
        s.stream = StreamSourceSpec::from_json(j.at("stream"));
        if (j.contains("cost_model")) s.cost_model = j.at("cost_model").get<CostModel>();
        if (j.contains("config")) {
            ConfigReport report = validate_config(j.at("config"));
            if (!report.ok()) throw ConfigError(report.errors);
            s.config = report.config;
        }
        for (const auto& q : j.at("queries")) {
            ScenarioQuery sq;
            sq.text = q.at("text").get<std::string>();
            sq.arrival_s = q.value("arrival_s", 0.0);
            if (q.contains("ground_truth_scene") && !q.at("ground_truth_scene").is_null()) {
                sq.ground_truth_scene = q.at("ground_truth_scene").get<std::size_t>();
            }
            s.queries.push_back(std::move(sq));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario: ") + e.what());
    }
    s.config.simulator = s.cost_model;
    if (auto issues = check_config(s.config); !issues.empty()) throw ConfigError(issues);
    if (s.queries.empty()) throw std::invalid_argument("scenario: no queries");
    return s;
}

json Scenario::to_json() const {
    json queries_json = json::array();
    for (const auto& q : queries) {
        json e = {{"text", q.text}, {"arrival_s", q.arrival_s}};
        if (q.ground_truth_scene) e["ground_truth_scene"] = *q.ground_truth_scene;
        queries_json.push_back(std::move(e));
    }
    return {{"stream", stream.to_json()},
            {"queries", queries_json},
            {"cost_model", cost_model},
            {"config", config_to_json(config)}};
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw StorageError("cannot read scenario " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("scenario " + path.string() + ": " + e.what());
    }
    return Scenario::from_json(j);
}

// ---------------------------------------------------------------------------

json StrategyRow::to_json(bool with_records) const {
    json j = {{"strategy", venus::to_string(strategy)},
              {"queries", queries},
              {"total_frames_sent", total_frames_sent},
              {"total_bytes_sent", total_bytes_sent},
              {"mean_frames_sent", mean_frames_sent},
              {"mean_bytes_sent", mean_bytes_sent},
              {"mean_latency", mean_latency},
              {"mean_distinct_clusters", mean_distinct_clusters},
              {"mean_distinct_scenes", mean_distinct_scenes},
              {"hit_rate", hit_rate ? json(*hit_rate) : json(nullptr)},
              {"ingestion_amortized_s", ingestion_amortized_s}};
    if (with_records) {
        json recs = json::array();
        for (const auto& r : records) recs.push_back(r.to_json());
        j["records"] = std::move(recs);
    }
    return j;
}

const StrategyRow& SimulationReport::row(Strategy s) const {
    for (const auto& r : rows) {
        if (r.strategy == s) return r;
    }
    throw std::out_of_range(std::string("no row for strategy ") + to_string(s));
}

json SimulationReport::to_json(bool with_records) const {
    json rows_json = json::array();
    for (const auto& r : rows) rows_json.push_back(r.to_json(with_records));
    return {{"stream_frames", stream_frames},
            {"ingestion", ingestion.to_json(false)},
            {"cost_model", cost_model},
            {"rows", rows_json}};
}

std::vector<std::size_t> uniform_positions(std::size_t total, std::size_t n) {
    n = std::min(n, total);
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(static_cast<std::size_t>(
            std::floor((static_cast<double>(i) + 0.5) * static_cast<double>(total) /
                       static_cast<double>(n))));
    }
    return out;
}

namespace {

RetrievalResult shipped_frames(const char* name, const std::vector<FrameId>& ids,
                               const std::vector<double>& timestamps) {
    RetrievalResult r;
    r.strategy = name;
    r.keyframe_ids = ids;
    r.keyframe_timestamps = timestamps;
    return r;
}

}  // namespace

SimulationReport simulate_strategies(const Scenario& scenario,
                                     const std::vector<std::string>& strategies,
                                     const Embedder& embedder, const AuxModels& aux) {
    std::vector<Strategy> parsed;
    for (const auto& name : strategies) parsed.push_back(parse_strategy(name));
    if (parsed.empty()) throw std::invalid_argument("simulate_strategies: no strategies");

    PipelineConfig config = scenario.config;
    config.simulator = scenario.cost_model;
    const CostModel& cost = config.simulator;

    SyntheticSource* synthetic = nullptr;
    std::unique_ptr<FrameSource> source = make_source(scenario.stream);
    synthetic = dynamic_cast<SyntheticSource*>(source.get());

    auto store = MemoryStore::in_memory(embedder.dimension());
    SimulationReport report;
    report.cost_model = cost;
    report.ingestion = run_ingestion(*source, *store, config, embedder, aux);
    report.stream_frames = report.ingestion.frames;
    const Snapshot snapshot = store->open_snapshot();

    std::unordered_map<FrameId, ClusterId> cluster_of_frame;
    std::vector<FrameId> all_ids;
    std::vector<double> all_ts;
    for (IndexId id : snapshot.index_ids()) {
        const Cluster& c = snapshot.cluster_of(id);
        for (std::size_t i = 0; i < c.member_frame_ids.size(); ++i) {
            cluster_of_frame.emplace(c.member_frame_ids[i], c.cluster_id);
            all_ids.push_back(c.member_frame_ids[i]);
        }
    }
    std::sort(all_ids.begin(), all_ids.end());
    all_ts.reserve(all_ids.size());
    for (FrameId id : all_ids) all_ts.push_back(snapshot.frame_timestamp(id));

    const double ingestion_device_s =
        static_cast<double>(report.ingestion.frames) * cost.segment_cluster_latency_s +
        static_cast<double>(report.ingestion.indexed_frames) *
            (cost.aux_latency_s + cost.embed_latency_s);
    const double nq = static_cast<double>(scenario.queries.size());

    for (Strategy strategy : parsed) {
        StrategyRow row;
        row.strategy = strategy;
        row.queries = scenario.queries.size();
        const bool venus = strategy == Strategy::akr || strategy == Strategy::fixed ||
                           strategy == Strategy::topk;
        if (venus) row.ingestion_amortized_s = ingestion_device_s / nq;

        std::size_t gt_queries = 0;
        std::size_t hits = 0;
        double sum_on_device = 0.0, sum_tx = 0.0, sum_cloud = 0.0;
        double sum_clusters = 0.0, sum_scenes = 0.0;

        for (std::size_t q = 0; q < scenario.queries.size(); ++q) {
            const ScenarioQuery& sq = scenario.queries[q];
            PipelineConfig qc = config;
            qc.retrieval.seed = rng::derive(config.retrieval.seed, q);

            QueryRecord rec;
            if (venus) {
                rec = run_query(sq.text, snapshot, embedder, qc, strategy, nullptr, sq.arrival_s);
            } else {
                rec.query = sq.text;
                rec.arrival_s = sq.arrival_s;
                rec.strategy = strategy;
                rec.seed = qc.retrieval.seed;
                if (strategy == Strategy::full_upload) {
                    rec.result = shipped_frames("full_upload", all_ids, all_ts);
                } else {
                    std::vector<FrameId> ids;
                    std::vector<double> ts;
                    for (std::size_t p : uniform_positions(all_ids.size(), fixed_budget(qc.retrieval))) {
                        ids.push_back(all_ids[p]);
                        ts.push_back(all_ts[p]);
                    }
                    rec.result = shipped_frames("uniform_sample", ids, ts);
                }
                rec.latency = query_latency(rec.result.keyframe_ids.size(), false, cost);
            }

            const std::size_t sent = rec.result.keyframe_ids.size();
            row.total_frames_sent += sent;
            row.total_bytes_sent += static_cast<double>(sent) * cost.frame_bytes;
            sum_on_device += rec.latency.on_device_s;
            sum_tx += rec.latency.transmission_s;
            sum_cloud += rec.latency.cloud_s;

            std::set<ClusterId> clusters;
            std::set<std::size_t> scenes;
            for (FrameId id : rec.result.keyframe_ids) {
                clusters.insert(cluster_of_frame.at(id));
                if (synthetic) {
                    if (auto s = synthetic->scene_of(id)) scenes.insert(*s);
                }
            }
            sum_clusters += static_cast<double>(clusters.size());
            sum_scenes += static_cast<double>(scenes.size());
            if (sq.ground_truth_scene && synthetic) {
                ++gt_queries;
                if (scenes.count(*sq.ground_truth_scene)) ++hits;
            }
            row.records.push_back(std::move(rec));
        }

        row.mean_frames_sent = static_cast<double>(row.total_frames_sent) / nq;
        row.mean_bytes_sent = row.total_bytes_sent / nq;
        row.mean_latency = LatencyBreakdown::make(sum_on_device / nq, sum_tx / nq, sum_cloud / nq);
        row.mean_distinct_clusters = sum_clusters / nq;
        row.mean_distinct_scenes = sum_scenes / nq;
        if (gt_queries) row.hit_rate = static_cast<double>(hits) / static_cast<double>(gt_queries);
        report.rows.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------

json FeasibilityReport::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) {
        rows_json.push_back({{"fps", r.fps},
                             {"load", r.load},
                             {"queue_growth_fps", r.queue_growth_fps},
                             {"sustainable", r.sustainable}});
    }
    return {{"sparsification_ratio", sparsification_ratio},
            {"per_frame_cost_s", per_frame_cost_s},
            {"max_sustainable_fps",
             max_sustainable_fps ? json(*max_sustainable_fps) : json(nullptr)},
            {"rows", rows_json}};
}

FeasibilityReport check_realtime_feasibility(const std::vector<double>& fps_values,
                                             const CostModel& cost,
                                             double sparsification_ratio) {
    if (!(sparsification_ratio >= 1.0) || !std::isfinite(sparsification_ratio)) {
        throw std::invalid_argument("sparsification ratio must be >= 1");
    }
    FeasibilityReport report;
    report.sparsification_ratio = sparsification_ratio;
    report.per_frame_cost_s = cost.segment_cluster_latency_s +
                              (cost.aux_latency_s + cost.embed_latency_s) / sparsification_ratio;
    if (report.per_frame_cost_s > 0.0) report.max_sustainable_fps = 1.0 / report.per_frame_cost_s;

    for (double fps : fps_values) {
        FeasibilityRow row;
        row.fps = fps;
        row.load = fps * report.per_frame_cost_s;
        row.sustainable = row.load <= 1.0 + 1e-12;
        if (!row.sustainable) row.queue_growth_fps = fps - *report.max_sustainable_fps;
        report.rows.push_back(row);
    }
    return report;
}

std::vector<double> fps_sweep(double lo, double hi, double step) {
    if (!(lo > 0.0) || !(hi >= lo) || !(step > 0.0)) {
        throw std::invalid_argument("fps sweep needs 0 < lo <= hi and step > 0");
    }
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        const double v = lo + static_cast<double>(i) * step;
        if (v > hi + 1e-9) break;
        out.push_back(v);
    }
    return out;
}

}  // namespace venus
