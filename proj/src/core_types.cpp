#include "venus/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace venus {

void require_valid(const Frame& frame) {
    if (frame.width == 0 || frame.height == 0) {
        throw std::invalid_argument("frame " + std::to_string(frame.frame_id) + " has zero area");
    }
    if (frame.pixels.size() != frame.pixel_count() * 3) {
        throw std::invalid_argument("frame " + std::to_string(frame.frame_id) +
                                    ": pixel buffer has " + std::to_string(frame.pixels.size()) +
                                    " bytes, expected " + std::to_string(frame.pixel_count() * 3));
    }
}

bool ChannelFeatures::valid() const noexcept {
    for (double c : {hue, saturation, lightness, edge}) {
        if (!std::isfinite(c) || c < 0.0 || c > 1.0) return false;
    }
    return true;
}

double ClustererConfig::effective_threshold() const {
    if (distance_threshold) return *distance_threshold;
    return 0.08 * std::sqrt(static_cast<double>(vector_length()));
}

EmbeddingVector EmbeddingVector::normalized(const std::vector<double>& raw) {
    double sq = 0.0;
    for (double x : raw) sq += x * x;
    const double n = std::sqrt(sq);
    std::vector<float> values(raw.size(), 0.0f);
    if (n > 0.0) {
        for (std::size_t i = 0; i < raw.size(); ++i) values[i] = static_cast<float>(raw[i] / n);
    }
    return from_values(std::move(values));
}

EmbeddingVector EmbeddingVector::from_values(std::vector<float> values) {
    EmbeddingVector v;
    double sq = 0.0;
    for (float x : values) sq += static_cast<double>(x) * x;
    v.values = std::move(values);
    v.norm = std::sqrt(sq);
    return v;
}

bool EmbeddingVector::is_unit(double tolerance) const {
    return std::abs(norm - 1.0) <= tolerance;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw std::invalid_argument("cosine: dimension mismatch " + std::to_string(a.dimension()) +
                                    " vs " + std::to_string(b.dimension()));
    }
    if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += static_cast<double>(a.values[i]) * b.values[i];
    }
    return std::clamp(dot / (a.norm * b.norm), -1.0, 1.0);
}

std::vector<std::string> check_invariants(const RetrievalResult& r) {
    std::vector<std::string> problems;

    std::uint64_t total = 0;
    for (const auto& [id, n] : r.counts) total += n;
    if (total != r.draws) {
        problems.push_back("sum of counts " + std::to_string(total) + " != draws " +
                           std::to_string(r.draws));
    }

    if (r.keyframe_ids.size() != r.keyframe_timestamps.size()) {
        problems.push_back("keyframe ids and timestamps differ in length");
    } else {
        for (std::size_t i = 1; i < r.keyframe_ids.size(); ++i) {
            if (r.keyframe_timestamps[i] < r.keyframe_timestamps[i - 1]) {
                problems.push_back("keyframes not in chronological order");
                break;
            }
        }
    }
    std::set<FrameId> unique(r.keyframe_ids.begin(), r.keyframe_ids.end());
    if (unique.size() != r.keyframe_ids.size()) problems.push_back("duplicate keyframe ids");

    if (!r.plan_distribution.empty()) {
        double cumulative = 0.0;
        for (IndexId id : r.selected_index_ids) {
            auto it = std::find_if(r.plan_distribution.begin(), r.plan_distribution.end(),
                                   [id](const auto& e) { return e.first == id; });
            if (it == r.plan_distribution.end()) {
                problems.push_back("selected index " + std::to_string(id) + " not in distribution");
                continue;
            }
            cumulative += it->second;
        }
        if (std::abs(cumulative - r.cumulative_probability) > 1e-9) {
            problems.push_back("cumulative probability does not match the distribution");
        }
    }
    return problems;
}

LatencyBreakdown LatencyBreakdown::make(double on_device_s, double transmission_s, double cloud_s) {
    return {on_device_s, transmission_s, cloud_s, on_device_s + transmission_s + cloud_s};
}

bool LatencyBreakdown::consistent(double tolerance) const {
    return on_device_s >= 0 && transmission_s >= 0 && cloud_s >= 0 &&
           std::abs(total_s - (on_device_s + transmission_s + cloud_s)) <= tolerance;
}

const char* to_string(EdgeOperator op) {
    switch (op) {
        case EdgeOperator::sobel: return "sobel";
        case EdgeOperator::prewitt: return "prewitt";
    }
    return "?";
}

const char* to_string(CentroidMode mode) {
    switch (mode) {
        case CentroidMode::running_mean: return "running_mean";
        case CentroidMode::first_frame: return "first_frame";
    }
    return "?";
}

const char* to_string(EmbedderBackend backend) {
    switch (backend) {
        case EmbedderBackend::mock: return "mock";
        case EmbedderBackend::http: return "http";
    }
    return "?";
}

const char* to_string(CloseReason reason) {
    switch (reason) {
        case CloseReason::boundary: return "boundary";
        case CloseReason::duration: return "duration";
        case CloseReason::end_of_stream: return "end_of_stream";
    }
    return "?";
}

}  // namespace venus
