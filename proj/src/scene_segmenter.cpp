#include "venus/scene_segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace venus {

namespace {

struct Hsl {
    double h, s, l;
};

Hsl to_hsl(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double hi = std::max({r, g, b});
    const double lo = std::min({r, g, b});
    const double l = (hi + lo) / 2.0;
    const double d = hi - lo;
    if (d == 0.0) return {0.0, 0.0, l};

    const double s = std::min(1.0, d / (1.0 - std::abs(2.0 * l - 1.0)));
    double h;
    if (hi == r) h = std::fmod((g - b) / d, 6.0);
    else if (hi == g) h = (b - r) / d + 2.0;
    else h = (r - g) / d + 4.0;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
    if (h >= 1.0) h -= 1.0;
    return {h, s, l};
}

}  // namespace

double hue_distance(double a, double b) noexcept {
    const double d = std::abs(a - b);
    return std::min(d, 1.0 - d);
}

ChannelMaps extract_channels(const Frame& frame, EdgeOperator op) {
    require_valid(frame);
    const std::size_t w = frame.width, h = frame.height, n = w * h;

    ChannelMaps maps;
    maps.width = frame.width;
    maps.height = frame.height;
    maps.hue.resize(n);
    maps.saturation.resize(n);
    maps.lightness.resize(n);
    maps.edge.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto* px = &frame.pixels[i * 3];
        const Hsl c = to_hsl(px[0], px[1], px[2]);
        maps.hue[i] = c.h;
        maps.saturation[i] = c.s;
        maps.lightness[i] = c.l;
    }

    // Smoothing weight of the off-axis rows: 2 for Sobel, 1 for Prewitt.
    const double center = op == EdgeOperator::sobel ? 2.0 : 1.0;
    const double max_response = std::sqrt(2.0) * (2.0 + center);

    auto L = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
        x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(w) - 1);
        y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1);
        return maps.lightness[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
    };
    for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(h); ++y) {
        for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(w); ++x) {
            const double gx = (L(x + 1, y - 1) + center * L(x + 1, y) + L(x + 1, y + 1)) -
                              (L(x - 1, y - 1) + center * L(x - 1, y) + L(x - 1, y + 1));
            const double gy = (L(x - 1, y + 1) + center * L(x, y + 1) + L(x + 1, y + 1)) -
                              (L(x - 1, y - 1) + center * L(x, y - 1) + L(x + 1, y - 1));
            maps.edge[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] =
                std::min(1.0, std::sqrt(gx * gx + gy * gy) / max_response);
        }
    }
    return maps;
}

SceneScore scene_score(const ChannelMaps& current, const ChannelMaps& previous,
                       const ChannelWeights& weights) {
    if (current.width != previous.width || current.height != previous.height) {
        throw std::invalid_argument("scene_score: frame dimensions differ (" +
                                    std::to_string(current.width) + "x" +
                                    std::to_string(current.height) + " vs " +
                                    std::to_string(previous.width) + "x" +
                                    std::to_string(previous.height) + ")");
    }
    const double wsum = weights.l1();
    if (!(wsum > 0.0)) throw std::invalid_argument("scene_score: weight vector sums to zero");

    const std::size_t n = current.hue.size();
    double dh = 0.0, ds = 0.0, dl = 0.0, de = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dh += hue_distance(current.hue[i], previous.hue[i]);
        ds += std::abs(current.saturation[i] - previous.saturation[i]);
        dl += std::abs(current.lightness[i] - previous.lightness[i]);
        de += std::abs(current.edge[i] - previous.edge[i]);
    }
    SceneScore out;
    const double inv = n ? 1.0 / static_cast<double>(n) : 0.0;
    out.features = {dh * inv, ds * inv, dl * inv, de * inv};
    out.phi = (weights.hue * out.features.hue + weights.saturation * out.features.saturation +
               weights.lightness * out.features.lightness + weights.edge * out.features.edge) /
              wsum;
    return out;
}

SceneSegmenter::SceneSegmenter(SegmenterConfig config) : config_(config) {
    if (!(config_.weights.l1() > 0.0)) {
        throw std::invalid_argument("segmenter: weight vector sums to zero");
    }
    if (!(config_.max_partition_duration > 0.0)) {
        throw std::invalid_argument("segmenter: max_partition_duration must be positive");
    }
}

std::optional<ScenePartition> SceneSegmenter::ingest(FramePtr frame) {
    if (!frame) throw std::invalid_argument("segmenter: null frame");
    require_valid(*frame);
    if (last_frame_id_ && frame->frame_id <= *last_frame_id_) {
        throw std::invalid_argument("segmenter: frame_id " + std::to_string(frame->frame_id) +
                                    " does not follow " + std::to_string(*last_frame_id_));
    }
    if (last_frame_id_ && frame->timestamp < last_timestamp_) {
        throw std::invalid_argument("segmenter: timestamp of frame " +
                                    std::to_string(frame->frame_id) + " goes backwards");
    }
    last_frame_id_ = frame->frame_id;
    last_timestamp_ = frame->timestamp;

    ChannelMaps maps = extract_channels(*frame, config_.edge_operator);
    if (previous_) {
        if (previous_->width == maps.width && previous_->height == maps.height) {
            last_score_ = scene_score(maps, *previous_, config_.weights);
        } else {
            // A resolution change cannot be scored; treat it as a hard cut.
            last_score_ = SceneScore{1.0, ChannelFeatures{1.0, 1.0, 1.0, 1.0}};
        }
    } else {
        last_score_ = SceneScore{};
    }
    previous_ = std::move(maps);

    std::optional<ScenePartition> closed;
    if (open_) {
        if (last_score_.phi > config_.scene_threshold) {
            closed = close_open(CloseReason::boundary);
        } else if (frame->timestamp - open_->start >= config_.max_partition_duration) {
            closed = close_open(CloseReason::duration);
        }
    }
    if (!open_) {
        open_.emplace();
        open_->partition_id = next_partition_id_++;
        open_->start = frame->timestamp;
        if (closed) last_boundary_timestamp_ = frame->timestamp;
    }
    open_->frames.push_back(frame);
    open_->end = frame->timestamp;
    return closed;
}

std::optional<ScenePartition> SceneSegmenter::flush() {
    if (!open_ || open_->frames.empty()) {
        open_.reset();
        return std::nullopt;
    }
    return close_open(CloseReason::end_of_stream);
}

ScenePartition SceneSegmenter::close_open(CloseReason reason) {
    ScenePartition p = std::move(*open_);
    open_.reset();
    p.closed = true;
    p.reason = reason;
    return p;
}

}  // namespace venus
