// venus: command-line front end for ingestion, querying, strategy benchmarks
// and real-time feasibility sweeps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "venus/config.hpp"
#include "venus/embedding.hpp"
#include "venus/image_io.hpp"
#include "venus/memory_store.hpp"
#include "venus/pipeline.hpp"
#include "venus/reasoner.hpp"
#include "venus/serialization.hpp"
#include "venus/simulator.hpp"
#include "venus/stream_source.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace venus;

namespace {

constexpr const char* kStoredConfig = "config.json";

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw StorageError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    image::write_file_atomic(
        path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void emit(const json& j, bool as_json, const std::string& text) {
    if (as_json) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << text;
    }
}

struct Overrides {
    std::optional<double> scene_threshold;
    std::optional<double> max_partition_duration;
    std::optional<double> cluster_threshold;
    std::optional<std::uint32_t> dimension;
    std::optional<std::size_t> queue_capacity;
    std::optional<double> temperature;
    std::optional<double> theta;
    std::optional<double> beta;
    std::optional<std::uint32_t> n_max;
    std::optional<std::uint32_t> n_fixed;
    std::optional<std::uint64_t> seed;
    std::optional<double> bandwidth;

    void add_ingest(CLI::App* app) {
        app->add_option("--scene-threshold", scene_threshold, "segmenter.scene_threshold");
        app->add_option("--max-partition-duration", max_partition_duration,
                        "segmenter.max_partition_duration");
        app->add_option("--cluster-threshold", cluster_threshold, "clusterer.distance_threshold");
        app->add_option("--dimension", dimension, "embedding.dimension");
        app->add_option("--queue-capacity", queue_capacity, "pipeline.queue_capacity");
    }
    void add_query(CLI::App* app) {
        app->add_option("--temperature", temperature, "retrieval.temperature");
        app->add_option("--theta", theta, "retrieval.theta");
        app->add_option("--beta", beta, "retrieval.beta");
        app->add_option("--n-max", n_max, "retrieval.n_max");
        app->add_option("--n-fixed", n_fixed, "retrieval.n_fixed");
        app->add_option("--seed", seed, "retrieval.seed");
        app->add_option("--bandwidth", bandwidth, "simulator.bandwidth_bps");
    }
    void apply(PipelineConfig& c) const {
        if (scene_threshold) c.segmenter.scene_threshold = *scene_threshold;
        if (max_partition_duration) c.segmenter.max_partition_duration = *max_partition_duration;
        if (cluster_threshold) c.clusterer.distance_threshold = *cluster_threshold;
        if (dimension) c.embedding.dimension = *dimension;
        if (queue_capacity) c.queue_capacity = *queue_capacity;
        if (temperature) c.retrieval.temperature = *temperature;
        if (theta) c.retrieval.theta = *theta;
        if (beta) c.retrieval.beta = *beta;
        if (n_max) c.retrieval.n_max = *n_max;
        if (n_fixed) c.retrieval.n_fixed = *n_fixed;
        if (seed) c.retrieval.seed = *seed;
        if (bandwidth) c.simulator.bandwidth_bps = *bandwidth;
        if (auto issues = check_config(c); !issues.empty()) throw ConfigError(issues);
    }
};

PipelineConfig config_from(const std::string& path, const Overrides& o,
                           const std::optional<fs::path>& fallback = {}) {
    PipelineConfig c;
    if (!path.empty()) {
        c = load_config(path);
    } else if (fallback && fs::exists(*fallback)) {
        c = load_config(*fallback);
    }
    o.apply(c);
    return c;
}

AuxModels aux_for(const PipelineConfig& c) {
    return c.embedding.stub_aux_models ? AuxModels::stub() : AuxModels();
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string source;
    std::string memory;
    std::string config;
    double fps = 1.0;
    bool timings = false;
    bool no_fsync = false;
};

int run_ingest(const IngestArgs& a, const Overrides& o, bool as_json) {
    const PipelineConfig config = config_from(a.config, o);
    std::unique_ptr<FrameSource> source;
    const std::string prefix = "synthetic:";
    if (a.source.rfind(prefix, 0) == 0) {
        source = make_source(StreamSourceSpec::from_json(read_json(a.source.substr(prefix.size()))));
    } else {
        source = std::make_unique<DirectorySource>(a.source, a.fps);
    }

    const auto embedder = make_embedder(config.embedding);
    auto store = MemoryStore::open(a.memory, embedder->dimension(), !a.no_fsync);
    const IngestionReport report = run_ingestion(*source, *store, config, *embedder, aux_for(config));
    write_text(fs::path(a.memory) / kStoredConfig, config_to_json(config).dump(2) + "\n");

    std::ostringstream text;
    text << "ingested " << report.frames << " frames into " << report.partitions
         << " partitions, " << report.clusters << " clusters, " << report.indexed_frames
         << " index frames (ratio " << report.sparsification_ratio() << ")\n";
    if (a.timings) text << "total " << report.total_s << " s\n";
    emit(report.to_json(a.timings), as_json, text.str());
    return 0;
}

struct QueryArgs {
    std::string memory;
    std::string text;
    std::string strategy;
    std::string config;
    std::string reasoner = "stub";
    std::string endpoint;
    std::string model = "vlm";
    std::vector<double> time_range;
};

int run_query_cmd(const QueryArgs& a, const Overrides& o, bool as_json) {
    const PipelineConfig config =
        config_from(a.config, o, fs::path(a.memory) / kStoredConfig);
    auto store = MemoryStore::open_existing(a.memory);
    const auto embedder = make_embedder(config.embedding);
    if (embedder->dimension() != store->dimension()) {
        throw std::invalid_argument("embedder dimension " + std::to_string(embedder->dimension()) +
                                    " does not match memory dimension " +
                                    std::to_string(store->dimension()));
    }
    Strategy strategy = config.retrieval.n_fixed ? Strategy::fixed : Strategy::akr;
    if (!a.strategy.empty()) strategy = parse_strategy(a.strategy);

    ReasonerDescriptor rd;
    if (a.reasoner == "http") {
        rd.backend = ReasonerBackend::http;
        rd.endpoint = a.endpoint;
        rd.model = a.model;
    } else if (a.reasoner != "stub" && a.reasoner != "none") {
        throw std::invalid_argument("unknown reasoner '" + a.reasoner + "'");
    }
    std::unique_ptr<Reasoner> reasoner;
    if (a.reasoner != "none") reasoner = make_reasoner(rd);

    std::optional<TimeRange> range;
    if (!a.time_range.empty()) range = TimeRange{a.time_range[0], a.time_range[1]};
    const Snapshot snapshot = store->open_snapshot();
    const QueryRecord rec =
        run_query(a.text, snapshot, *embedder, config, strategy, reasoner.get(), 0.0, range);

    std::ostringstream text;
    text << to_string(strategy) << ": " << rec.result.keyframe_ids.size() << " keyframes [";
    for (std::size_t i = 0; i < rec.result.keyframe_ids.size(); ++i) {
        text << (i ? " " : "") << rec.result.keyframe_ids[i];
    }
    text << "], latency " << rec.latency.total_s << " s\n";
    if (rec.answer) text << "answer: " << *rec.answer << "\n";
    if (rec.reasoner_error) text << "reasoner error: " << *rec.reasoner_error << "\n";
    emit(rec.to_json(), as_json, text.str());
    return rec.reasoner_error ? 1 : 0;
}

struct BenchArgs {
    std::string scenario;
    std::string strategies = "venus_akr,venus_fixed,topk,full_upload,uniform_sample";
    std::string out;
    bool records = false;
};

int run_bench(const BenchArgs& a, bool as_json) {
    const Scenario scenario = load_scenario(a.scenario);
    std::vector<std::string> names;
    std::stringstream ss(a.strategies);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) names.push_back(item);
    }
    for (const auto& n : names) parse_strategy(n);

    const auto embedder = make_embedder(scenario.config.embedding);
    const SimulationReport report =
        simulate_strategies(scenario, names, *embedder, aux_for(scenario.config));
    const json j = report.to_json(a.records);
    if (!a.out.empty()) write_text(a.out, j.dump(2) + "\n");

    std::ostringstream text;
    text << "stream frames " << report.stream_frames << ", index frames "
         << report.ingestion.indexed_frames << "\n";
    for (const auto& r : report.rows) {
        text << to_string(r.strategy) << ": frames " << r.mean_frames_sent << ", bytes "
             << r.mean_bytes_sent << ", latency " << r.mean_latency.total_s << " s (device "
             << r.mean_latency.on_device_s << ", network " << r.mean_latency.transmission_s
             << ", cloud " << r.mean_latency.cloud_s << "), clusters " << r.mean_distinct_clusters;
        if (r.hit_rate) text << ", hit rate " << *r.hit_rate;
        text << ", ingestion/query " << r.ingestion_amortized_s << " s\n";
    }
    emit(j, as_json, text.str());
    return 0;
}

struct FeasibilityArgs {
    std::string profile;
    std::string fps_range = "1:30";
    double step = 1.0;
    std::optional<double> ratio;
    std::string scenario;
};

std::vector<double> parse_range(const std::string& s, double default_step) {
    std::vector<double> parts;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ':');) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw std::invalid_argument("--fps-range: bad number '" + item + "'");
        }
    }
    if (parts.size() == 1) return {parts[0]};
    if (parts.size() < 2 || parts.size() > 3) {
        throw std::invalid_argument("--fps-range expects lo:hi or lo:hi:step");
    }
    return fps_sweep(parts[0], parts[1], parts.size() == 3 ? parts[2] : default_step);
}

int run_feasibility(const FeasibilityArgs& a, bool as_json) {
    const json profile = read_json(a.profile);
    CostModel cost;
    try {
        cost = profile.get<CostModel>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(a.profile + ": " + e.what());
    }
    double ratio = profile.value("sparsification_ratio", 1.0);
    json measured = nullptr;
    if (!a.scenario.empty()) {
        const Scenario scenario = load_scenario(a.scenario);
        const auto embedder = make_embedder(scenario.config.embedding);
        auto source = make_source(scenario.stream);
        auto store = MemoryStore::in_memory(embedder->dimension());
        const IngestionReport ing =
            run_ingestion(*source, *store, scenario.config, *embedder, aux_for(scenario.config));
        ratio = ing.sparsification_ratio();
        measured = ing.to_json(false);
        measured.erase("partition_list");
    }
    if (a.ratio) ratio = *a.ratio;

    const FeasibilityReport report =
        check_realtime_feasibility(parse_range(a.fps_range, a.step), cost, ratio);
    json j = report.to_json();
    if (!measured.is_null()) j["measured_ingestion"] = measured;

    std::ostringstream text;
    text << "sparsification ratio " << ratio << ", device cost per frame "
         << report.per_frame_cost_s << " s, max sustainable fps ";
    if (report.max_sustainable_fps) text << *report.max_sustainable_fps; else text << "unbounded";
    text << "\n";
    for (const auto& r : report.rows) {
        text << "  fps " << r.fps << ": load " << r.load
             << (r.sustainable ? " sustainable" : " backlog grows") << "\n";
    }
    emit(j, as_json, text.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge video memory: ingestion, retrieval and cost simulation"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Emit JSON on stdout");

    Overrides overrides;

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Index a frame stream into a memory root");
    ingest_cmd->add_option("--source", ingest.source, "Image directory or synthetic:<spec.json>")
        ->required();
    ingest_cmd->add_option("--memory", ingest.memory, "Memory root")->required();
    ingest_cmd->add_option("--config", ingest.config, "Configuration file");
    ingest_cmd->add_option("--fps", ingest.fps, "Frame rate for image directories");
    ingest_cmd->add_flag("--timings", ingest.timings, "Include wall-clock timings");
    ingest_cmd->add_flag("--no-fsync", ingest.no_fsync, "Skip fsync on commits");
    ingest_cmd->add_flag("--json", as_json, "Emit JSON on stdout");
    overrides.add_ingest(ingest_cmd);

    QueryArgs query;
    auto* query_cmd = app.add_subcommand("query", "Retrieve keyframes for a text query");
    query_cmd->add_option("--memory", query.memory, "Memory root")->required();
    query_cmd->add_option("--text", query.text, "Query text")->required();
    query_cmd->add_option("--strategy", query.strategy, "akr, fixed or topk");
    query_cmd->add_option("--config", query.config,
                          "Configuration file (defaults to the one saved at ingest)");
    query_cmd->add_option("--reasoner", query.reasoner, "stub, http or none");
    query_cmd->add_option("--endpoint", query.endpoint, "Reasoner base URL");
    query_cmd->add_option("--model", query.model, "Reasoner model name");
    query_cmd->add_option("--time-range", query.time_range, "Start and end seconds")->expected(2);
    query_cmd->add_flag("--json", as_json, "Emit JSON on stdout");
    overrides.add_query(query_cmd);

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Compare transmission strategies on a scenario");
    bench_cmd->add_option("--scenario", bench.scenario, "Scenario file")->required();
    bench_cmd->add_option("--strategies", bench.strategies, "Comma-separated strategy names");
    bench_cmd->add_option("--out", bench.out, "Write the report here");
    bench_cmd->add_flag("--records", bench.records, "Include per-query records");
    bench_cmd->add_flag("--json", as_json, "Emit JSON on stdout");

    FeasibilityArgs feas;
    auto* feas_cmd = app.add_subcommand("feasibility", "Sweep stream rates against a device profile");
    feas_cmd->add_option("--profile", feas.profile, "Device cost profile (JSON)")->required();
    feas_cmd->add_option("--fps-range", feas.fps_range, "lo:hi or lo:hi:step");
    feas_cmd->add_option("--step", feas.step, "Sweep step when --fps-range has none");
    feas_cmd->add_option("--ratio", feas.ratio, "Frames per index frame");
    feas_cmd->add_option("--scenario", feas.scenario, "Measure the ratio by ingesting this scenario");
    feas_cmd->add_flag("--json", as_json, "Emit JSON on stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd) return run_ingest(ingest, overrides, as_json);
        if (*query_cmd) return run_query_cmd(query, overrides, as_json);
        if (*bench_cmd) return run_bench(bench, as_json);
        if (*feas_cmd) return run_feasibility(feas, as_json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (as_json) std::cout << json{{"error", e.what()}}.dump(2) << "\n";
        return 1;
    }
    return 1;
}
