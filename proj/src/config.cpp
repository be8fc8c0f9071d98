#include "venus/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace venus {

using nlohmann::json;

std::string ConfigReport::summary() const {
    std::ostringstream out;
    for (const auto& e : errors) out << "error: " << e.str() << "\n";
    for (const auto& w : warnings) out << "warning: " << w << "\n";
    return out.str();
}

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
    std::string s = "invalid configuration:";
    for (const auto& i : issues) s += "\n  " + i.str();
    return s;
}

// Pulls typed values out of a JSON section, recording type errors and
// unknown keys instead of throwing.
class SectionReader {
public:
    SectionReader(const json& doc, std::string name, ConfigReport& report)
        : name_(std::move(name)), report_(report) {
        if (!doc.contains(name_)) return;
        const json& s = doc.at(name_);
        if (!s.is_object()) {
            report_.errors.push_back({name_, "section must be an object"});
            return;
        }
        section_ = &s;
    }

    ~SectionReader() {
        if (!section_) return;
        for (const auto& [key, _] : section_->items()) {
            if (!seen_.count(key)) report_.warnings.push_back("unknown key " + path(key));
        }
    }

    SectionReader(const SectionReader&) = delete;
    SectionReader& operator=(const SectionReader&) = delete;

    std::string path(const std::string& key) const { return name_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        if (!section_ || !section_->contains(key)) return nullptr;
        return &section_->at(key);
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (v->is_number()) out = v->get<double>();
            else type_error(key, "a number");
        }
    }

    template <typename Int>
    void integer(const std::string& key, Int& out) {
        if (const json* v = find(key)) {
            if (v->is_number_integer() && (v->is_number_unsigned() || v->get<std::int64_t>() >= 0)) {
                out = v->get<Int>();
            } else if (v->is_number_integer()) {
                report_.errors.push_back({path(key), "must be non-negative"});
            } else {
                type_error(key, "an integer");
            }
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (v->is_boolean()) out = v->get<bool>();
            else type_error(key, "a boolean");
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (v->is_string()) out = v->get<std::string>();
            else type_error(key, "a string");
        }
    }

    void type_error(const std::string& key, const char* expected) {
        report_.errors.push_back({path(key), std::string("must be ") + expected});
    }

    ConfigReport& report() { return report_; }

private:
    std::string name_;
    ConfigReport& report_;
    const json* section_ = nullptr;
    std::set<std::string> seen_;
};

void read_segmenter(const json& doc, ConfigReport& report) {
    SectionReader r(doc, "segmenter", report);
    auto& c = report.config.segmenter;
    if (const json* w = r.find("weights")) {
        if (w->is_array() && w->size() == 4 &&
            std::all_of(w->begin(), w->end(), [](const json& x) { return x.is_number(); })) {
            c.weights = {(*w)[0].get<double>(), (*w)[1].get<double>(), (*w)[2].get<double>(),
                         (*w)[3].get<double>()};
        } else if (w->is_object()) {
            auto pick = [&](const char* k, double& out) {
                if (!w->contains(k)) return;
                if (w->at(k).is_number()) out = w->at(k).get<double>();
                else report.errors.push_back({r.path("weights.") + k, "must be a number"});
            };
            pick("hue", c.weights.hue);
            pick("saturation", c.weights.saturation);
            pick("lightness", c.weights.lightness);
            pick("edge", c.weights.edge);
        } else {
            r.type_error("weights", "an array of 4 numbers or an object {hue,saturation,lightness,edge}");
        }
    }
    r.number("scene_threshold", c.scene_threshold);
    r.number("max_partition_duration", c.max_partition_duration);
    std::string op = to_string(c.edge_operator);
    r.string("edge_operator", op);
    if (op == "sobel") c.edge_operator = EdgeOperator::sobel;
    else if (op == "prewitt") c.edge_operator = EdgeOperator::prewitt;
    else report.errors.push_back({r.path("edge_operator"), "unknown edge operator '" + op + "'"});
}

void read_clusterer(const json& doc, ConfigReport& report) {
    SectionReader r(doc, "clusterer", report);
    auto& c = report.config.clusterer;
    if (const json* t = r.find("distance_threshold")) {
        if (t->is_null()) c.distance_threshold.reset();
        else if (t->is_number()) c.distance_threshold = t->get<double>();
        else r.type_error("distance_threshold", "a number or null");
    }
    r.integer("downscale_edge", c.downscale_edge);
    std::string mode = to_string(c.centroid_mode);
    r.string("centroid_mode", mode);
    if (mode == "running_mean") c.centroid_mode = CentroidMode::running_mean;
    else if (mode == "first_frame") c.centroid_mode = CentroidMode::first_frame;
    else report.errors.push_back({r.path("centroid_mode"), "unknown centroid mode '" + mode + "'"});
}

void read_embedding(const json& doc, ConfigReport& report) {
    SectionReader r(doc, "embedding", report);
    auto& c = report.config.embedding;
    std::string backend = to_string(c.backend);
    r.string("backend", backend);
    if (backend == "mock") c.backend = EmbedderBackend::mock;
    else if (backend == "http") c.backend = EmbedderBackend::http;
    else report.errors.push_back({r.path("backend"), "unknown backend '" + backend + "'"});
    r.integer("dimension", c.dimension);
    r.string("endpoint", c.endpoint);
    r.number("timeout_s", c.timeout_s);
    if (const json* v = r.find("max_retries")) {
        if (v->is_number_integer()) c.max_retries = v->get<int>();
        else r.type_error("max_retries", "an integer");
    }
    if (const json* v = r.find("max_in_flight")) {
        if (v->is_number_integer()) c.max_in_flight = v->get<int>();
        else r.type_error("max_in_flight", "an integer");
    }
    r.boolean("stub_aux_models", c.stub_aux_models);
}

void read_retrieval(const json& doc, ConfigReport& report) {
    SectionReader r(doc, "retrieval", report);
    auto& c = report.config.retrieval;
    r.number("temperature", c.temperature);
    r.number("theta", c.theta);
    r.number("beta", c.beta);
    r.integer("n_max", c.n_max);
    if (const json* v = r.find("n_fixed")) {
        if (v->is_null()) {
            c.n_fixed.reset();
        } else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
            c.n_fixed = v->get<std::uint32_t>();
        } else {
            r.type_error("n_fixed", "a positive integer or null");
        }
    }
    r.integer("seed", c.seed);
}

void read_simulator(const json& doc, ConfigReport& report) {
    SectionReader r(doc, "simulator", report);
    auto& c = report.config.simulator;
    r.number("bandwidth_bps", c.bandwidth_bps);
    r.number("embed_latency_s", c.embed_latency_s);
    r.number("aux_latency_s", c.aux_latency_s);
    r.number("segment_cluster_latency_s", c.segment_cluster_latency_s);
    r.number("cloud_base_s", c.cloud_base_s);
    r.number("cloud_per_frame_s", c.cloud_per_frame_s);
    r.number("frame_bytes", c.frame_bytes);
}

void read_pipeline(const json& doc, ConfigReport& report) {
    SectionReader r(doc, "pipeline", report);
    r.integer("queue_capacity", report.config.queue_capacity);
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<ConfigIssue> check_config(const PipelineConfig& config) {
    std::vector<ConfigIssue> out;
    auto require = [&](bool ok, std::string path, std::string message) {
        if (!ok) out.push_back({std::move(path), std::move(message)});
    };
    auto finite_nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };

    const auto& s = config.segmenter;
    const auto& w = s.weights;
    require(finite_nonneg(w.hue) && finite_nonneg(w.saturation) && finite_nonneg(w.lightness) &&
                finite_nonneg(w.edge),
            "segmenter.weights", "weights must be finite and non-negative");
    require(w.l1() > 0.0, "segmenter.weights",
            "weight vector (hue, saturation, lightness, edge) needs at least one positive component");
    require(s.scene_threshold > 0.0 && s.scene_threshold <= 1.0, "segmenter.scene_threshold",
            "scene threshold must be in (0, 1]");
    require(s.max_partition_duration > 0.0, "segmenter.max_partition_duration",
            "max partition duration must be positive");

    const auto& c = config.clusterer;
    if (c.distance_threshold) {
        require(*c.distance_threshold > 0.0, "clusterer.distance_threshold",
                "distance threshold must be positive");
    }
    require(c.downscale_edge >= 1, "clusterer.downscale_edge", "downscale edge must be at least 1");

    const auto& e = config.embedding;
    require(e.dimension >= 8, "embedding.dimension", "embedding dimension must be at least 8");
    if (e.backend == EmbedderBackend::http) {
        require(!e.endpoint.empty(), "embedding.endpoint", "http backend needs an endpoint");
    }
    require(e.timeout_s > 0.0, "embedding.timeout_s", "timeout must be positive");
    require(e.max_retries >= 0, "embedding.max_retries", "retry count must be non-negative");
    require(e.max_in_flight >= 1, "embedding.max_in_flight", "in-flight limit must be at least 1");

    const auto& r = config.retrieval;
    require(r.temperature > 0.0 && std::isfinite(r.temperature), "retrieval.temperature",
            "temperature must be positive");
    require(r.theta > 0.0 && r.theta <= 1.0, "retrieval.theta", "theta must be in (0, 1]");
    require(r.beta > 0.0 && std::isfinite(r.beta), "retrieval.beta", "beta must be positive");
    require(r.n_max >= 1, "retrieval.n_max", "n_max must be at least 1");
    if (r.n_fixed) require(*r.n_fixed >= 1, "retrieval.n_fixed", "n_fixed must be at least 1");

    const auto& m = config.simulator;
    require(m.bandwidth_bps > 0.0, "simulator.bandwidth_bps", "bandwidth must be positive");
    require(finite_nonneg(m.embed_latency_s), "simulator.embed_latency_s", "must be non-negative");
    require(finite_nonneg(m.aux_latency_s), "simulator.aux_latency_s", "must be non-negative");
    require(finite_nonneg(m.segment_cluster_latency_s), "simulator.segment_cluster_latency_s",
            "must be non-negative");
    require(finite_nonneg(m.cloud_base_s), "simulator.cloud_base_s", "must be non-negative");
    require(finite_nonneg(m.cloud_per_frame_s), "simulator.cloud_per_frame_s",
            "must be non-negative");
    require(finite_nonneg(m.frame_bytes), "simulator.frame_bytes", "must be non-negative");

    require(config.queue_capacity >= 1, "pipeline.queue_capacity",
            "queue capacity must be at least 1");
    return out;
}

ConfigReport validate_config(const json& document) {
    ConfigReport report;
    if (!document.is_object()) {
        report.errors.push_back({"", "configuration must be a JSON object"});
        return report;
    }
    static const std::set<std::string> sections = {"segmenter", "clusterer", "embedding",
                                                   "retrieval", "simulator", "pipeline"};
    for (const auto& [key, _] : document.items()) {
        if (!sections.count(key)) report.warnings.push_back("unknown section " + key);
    }

    read_segmenter(document, report);
    read_clusterer(document, report);
    read_embedding(document, report);
    read_retrieval(document, report);
    read_simulator(document, report);
    read_pipeline(document, report);

    for (auto& issue : check_config(report.config)) {
        // Type errors already reported for a path take precedence.
        bool dup = std::any_of(report.errors.begin(), report.errors.end(),
                               [&](const ConfigIssue& e) { return e.path == issue.path; });
        if (!dup) report.errors.push_back(std::move(issue));
    }

    const auto& r = report.config.retrieval;
    if (r.beta != 1.0) {
        std::string w = "retrieval.beta = " + std::to_string(r.beta) +
                        ": cumulative probability is divided by beta during adaptive retrieval";
        if (r.beta * r.theta > 1.0) w += "; theta * beta > 1, so only n_max can end sampling";
        report.warnings.push_back(std::move(w));
    }
    return report;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({{path.string(), "cannot open configuration file"}});
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({{path.string(), std::string("parse error: ") + e.what()}});
    }
    ConfigReport report = validate_config(doc);
    if (!report.ok()) throw ConfigError(report.errors);
    return report.config;
}

json config_to_json(const PipelineConfig& config) {
    const auto& s = config.segmenter;
    const auto& c = config.clusterer;
    const auto& e = config.embedding;
    const auto& r = config.retrieval;
    const auto& m = config.simulator;
    json doc;
    doc["segmenter"] = {
        {"weights", {s.weights.hue, s.weights.saturation, s.weights.lightness, s.weights.edge}},
        {"scene_threshold", s.scene_threshold},
        {"max_partition_duration", s.max_partition_duration},
        {"edge_operator", to_string(s.edge_operator)},
    };
    doc["clusterer"] = {
        {"distance_threshold", c.distance_threshold ? json(*c.distance_threshold) : json(nullptr)},
        {"downscale_edge", c.downscale_edge},
        {"centroid_mode", to_string(c.centroid_mode)},
    };
    doc["embedding"] = {
        {"backend", to_string(e.backend)}, {"dimension", e.dimension},
        {"endpoint", e.endpoint},          {"timeout_s", e.timeout_s},
        {"max_retries", e.max_retries},    {"max_in_flight", e.max_in_flight},
        {"stub_aux_models", e.stub_aux_models},
    };
    doc["retrieval"] = {
        {"temperature", r.temperature},
        {"theta", r.theta},
        {"beta", r.beta},
        {"n_max", r.n_max},
        {"n_fixed", r.n_fixed ? json(*r.n_fixed) : json(nullptr)},
        {"seed", r.seed},
    };
    doc["simulator"] = {
        {"bandwidth_bps", m.bandwidth_bps},
        {"embed_latency_s", m.embed_latency_s},
        {"aux_latency_s", m.aux_latency_s},
        {"segment_cluster_latency_s", m.segment_cluster_latency_s},
        {"cloud_base_s", m.cloud_base_s},
        {"cloud_per_frame_s", m.cloud_per_frame_s},
        {"frame_bytes", m.frame_bytes},
    };
    doc["pipeline"] = {{"queue_capacity", config.queue_capacity}};
    return doc;
}

}  // namespace venus
