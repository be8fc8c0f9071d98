#pragma once
// JSON encoding for domain records. Floats survive a round trip bit-exactly:
// they widen to double, which the writer prints with round-trip precision.

#include <json.hpp>

#include "venus/core_types.hpp"

namespace venus {

void to_json(nlohmann::json& j, const ChannelFeatures& v);
void from_json(const nlohmann::json& j, ChannelFeatures& v);

void to_json(nlohmann::json& j, const Cluster& v);
void from_json(const nlohmann::json& j, Cluster& v);

void to_json(nlohmann::json& j, const EmbeddingVector& v);
void from_json(const nlohmann::json& j, EmbeddingVector& v);

void to_json(nlohmann::json& j, const IndexedFrame& v);
void from_json(const nlohmann::json& j, IndexedFrame& v);

void to_json(nlohmann::json& j, const RetrievalResult& v);
void from_json(const nlohmann::json& j, RetrievalResult& v);

void to_json(nlohmann::json& j, const LatencyBreakdown& v);
void from_json(const nlohmann::json& j, LatencyBreakdown& v);

void to_json(nlohmann::json& j, const CostModel& v);
void from_json(const nlohmann::json& j, CostModel& v);

}  // namespace venus
