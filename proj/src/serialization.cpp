#include "venus/serialization.hpp"

namespace venus {

using nlohmann::json;

void to_json(json& j, const ChannelFeatures& v) {
    j = {{"hue", v.hue}, {"saturation", v.saturation}, {"lightness", v.lightness}, {"edge", v.edge}};
}

void from_json(const json& j, ChannelFeatures& v) {
    j.at("hue").get_to(v.hue);
    j.at("saturation").get_to(v.saturation);
    j.at("lightness").get_to(v.lightness);
    j.at("edge").get_to(v.edge);
}

void to_json(json& j, const Cluster& v) {
    j = {{"cluster_id", v.cluster_id},
         {"partition_id", v.partition_id},
         {"member_frame_ids", v.member_frame_ids},
         {"member_timestamps", v.member_timestamps},
         {"index_frame_id", v.index_frame_id ? json(*v.index_frame_id) : json(nullptr)}};
    // Centroids are large; only written when the caller kept them.
    if (!v.centroid.empty()) j["centroid"] = v.centroid;
}

void from_json(const json& j, Cluster& v) {
    j.at("cluster_id").get_to(v.cluster_id);
    j.at("partition_id").get_to(v.partition_id);
    j.at("member_frame_ids").get_to(v.member_frame_ids);
    j.at("member_timestamps").get_to(v.member_timestamps);
    const json& idx = j.at("index_frame_id");
    if (idx.is_null()) v.index_frame_id.reset();
    else v.index_frame_id = idx.get<FrameId>();
    v.centroid.clear();
    if (j.contains("centroid")) j.at("centroid").get_to(v.centroid);
}

void to_json(json& j, const EmbeddingVector& v) {
    j = {{"values", v.values}, {"norm", v.norm}};
}

void from_json(const json& j, EmbeddingVector& v) {
    j.at("values").get_to(v.values);
    j.at("norm").get_to(v.norm);
}

void to_json(json& j, const IndexedFrame& v) {
    j = {{"index_id", v.index_id},   {"frame_id", v.frame_id},
         {"cluster_id", v.cluster_id}, {"timestamp", v.timestamp},
         {"aux_prompt", v.aux_prompt}, {"embedding", v.embedding}};
}

void from_json(const json& j, IndexedFrame& v) {
    j.at("index_id").get_to(v.index_id);
    j.at("frame_id").get_to(v.frame_id);
    j.at("cluster_id").get_to(v.cluster_id);
    j.at("timestamp").get_to(v.timestamp);
    j.at("aux_prompt").get_to(v.aux_prompt);
    j.at("embedding").get_to(v.embedding);
}

void to_json(json& j, const RetrievalResult& v) {
    json counts = json::array();
    for (const auto& [id, n] : v.counts) counts.push_back({{"index_id", id}, {"count", n}});
    json dist = json::array();
    for (const auto& [id, p] : v.plan_distribution) dist.push_back({{"index_id", id}, {"p", p}});
    j = {{"strategy", v.strategy},
         {"selected_index_ids", v.selected_index_ids},
         {"counts", counts},
         {"keyframe_ids", v.keyframe_ids},
         {"keyframe_timestamps", v.keyframe_timestamps},
         {"draws", v.draws},
         {"cumulative_probability", v.cumulative_probability},
         {"plan_distribution", dist}};
}

void from_json(const json& j, RetrievalResult& v) {
    j.at("strategy").get_to(v.strategy);
    j.at("selected_index_ids").get_to(v.selected_index_ids);
    v.counts.clear();
    for (const auto& c : j.at("counts")) {
        v.counts[c.at("index_id").get<IndexId>()] = c.at("count").get<std::uint32_t>();
    }
    j.at("keyframe_ids").get_to(v.keyframe_ids);
    j.at("keyframe_timestamps").get_to(v.keyframe_timestamps);
    j.at("draws").get_to(v.draws);
    j.at("cumulative_probability").get_to(v.cumulative_probability);
    v.plan_distribution.clear();
    for (const auto& e : j.at("plan_distribution")) {
        v.plan_distribution.emplace_back(e.at("index_id").get<IndexId>(), e.at("p").get<double>());
    }
}

void to_json(json& j, const LatencyBreakdown& v) {
    j = {{"on_device_s", v.on_device_s},
         {"transmission_s", v.transmission_s},
         {"cloud_s", v.cloud_s},
         {"total_s", v.total_s}};
}

void from_json(const json& j, LatencyBreakdown& v) {
    j.at("on_device_s").get_to(v.on_device_s);
    j.at("transmission_s").get_to(v.transmission_s);
    j.at("cloud_s").get_to(v.cloud_s);
    j.at("total_s").get_to(v.total_s);
}

void to_json(json& j, const CostModel& v) {
    j = {{"bandwidth_bps", v.bandwidth_bps},
         {"embed_latency_s", v.embed_latency_s},
         {"aux_latency_s", v.aux_latency_s},
         {"segment_cluster_latency_s", v.segment_cluster_latency_s},
         {"cloud_base_s", v.cloud_base_s},
         {"cloud_per_frame_s", v.cloud_per_frame_s},
         {"frame_bytes", v.frame_bytes}};
}

void from_json(const json& j, CostModel& v) {
    CostModel d;
    v.bandwidth_bps = j.value("bandwidth_bps", d.bandwidth_bps);
    v.embed_latency_s = j.value("embed_latency_s", d.embed_latency_s);
    v.aux_latency_s = j.value("aux_latency_s", d.aux_latency_s);
    v.segment_cluster_latency_s = j.value("segment_cluster_latency_s", d.segment_cluster_latency_s);
    v.cloud_base_s = j.value("cloud_base_s", d.cloud_base_s);
    v.cloud_per_frame_s = j.value("cloud_per_frame_s", d.cloud_per_frame_s);
    v.frame_bytes = j.value("frame_bytes", d.frame_bytes);
}

}  // namespace venus
