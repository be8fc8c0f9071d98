#include "venus/frame_clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace venus {

namespace {

struct Tap {
    std::size_t src;
    double weight;
};

// For each output cell, the source cells it overlaps and the overlap fraction
// (weights sum to 1 per output cell).
std::vector<std::vector<Tap>> area_taps(std::size_t src_len, std::size_t dst_len) {
    std::vector<std::vector<Tap>> taps(dst_len);
    const double scale = static_cast<double>(src_len) / static_cast<double>(dst_len);
    for (std::size_t o = 0; o < dst_len; ++o) {
        const double lo = o * scale;
        const double hi = (o + 1) * scale;
        const auto first = static_cast<std::size_t>(std::floor(lo));
        const auto last = std::min(src_len - 1, static_cast<std::size_t>(std::ceil(hi)) - 1);
        for (std::size_t s = first; s <= last; ++s) {
            const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
            if (overlap > 0.0) taps[o].push_back({s, overlap / scale});
        }
    }
    return taps;
}

}  // namespace

std::vector<float> flatten(const Frame& frame, std::uint32_t edge) {
    require_valid(frame);
    if (edge == 0) throw std::invalid_argument("flatten: edge must be at least 1");

    const auto cols = area_taps(frame.width, edge);
    const auto rows = area_taps(frame.height, edge);
    std::vector<float> out(static_cast<std::size_t>(edge) * edge * 3);
    for (std::uint32_t oy = 0; oy < edge; ++oy) {
        for (std::uint32_t ox = 0; ox < edge; ++ox) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (const Tap& ty : rows[oy]) {
                const std::size_t row = ty.src * frame.width;
                for (const Tap& tx : cols[ox]) {
                    const double w = ty.weight * tx.weight;
                    const auto* px = &frame.pixels[(row + tx.src) * 3];
                    acc[0] += w * px[0];
                    acc[1] += w * px[1];
                    acc[2] += w * px[2];
                }
            }
            float* dst = &out[(static_cast<std::size_t>(oy) * edge + ox) * 3];
            for (int c = 0; c < 3; ++c) {
                dst[c] = static_cast<float>(std::clamp(acc[c] / 255.0, 0.0, 1.0));
            }
        }
    }
    return out;
}

double l2_distance(std::span<const float> a, std::span<const double> b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

std::vector<Cluster> cluster_partition(const ScenePartition& partition,
                                       const ClustererConfig& config, ClusterId first_id) {
    if (!partition.closed) {
        throw std::invalid_argument("cluster_partition: partition " +
                                    std::to_string(partition.partition_id) + " is still open");
    }
    if (partition.frames.empty()) {
        throw std::invalid_argument("cluster_partition: partition " +
                                    std::to_string(partition.partition_id) + " is empty");
    }
    const double threshold = config.effective_threshold();
    if (!(threshold >= 0.0)) throw std::invalid_argument("cluster_partition: negative threshold");

    struct Working {
        std::vector<double> sum;
        std::vector<double> centroid;
        std::vector<std::size_t> members;  // positions in `vectors`
    };
    std::vector<std::vector<float>> vectors;
    vectors.reserve(partition.frames.size());
    std::vector<Working> clusters;

    for (const FramePtr& frame : partition.frames) {
        vectors.push_back(flatten(*frame, config.downscale_edge));
        const std::vector<float>& v = vectors.back();
        const std::size_t pos = vectors.size() - 1;

        std::size_t best = clusters.size();
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            const double d = l2_distance(v, clusters[c].centroid);
            if (d < best_dist) {
                best_dist = d;
                best = c;
            }
        }

        if (best < clusters.size() && best_dist <= threshold) {
            Working& w = clusters[best];
            w.members.push_back(pos);
            if (config.centroid_mode == CentroidMode::running_mean) {
                const double n = static_cast<double>(w.members.size());
                for (std::size_t i = 0; i < v.size(); ++i) {
                    w.sum[i] += v[i];
                    w.centroid[i] = w.sum[i] / n;
                }
            }
        } else {
            Working w;
            w.sum.assign(v.begin(), v.end());
            w.centroid = w.sum;
            w.members.push_back(pos);
            clusters.push_back(std::move(w));
        }
    }

    std::vector<Cluster> out;
    out.reserve(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const Working& w = clusters[c];
        Cluster cl;
        cl.cluster_id = first_id + c;
        cl.partition_id = partition.partition_id;
        cl.centroid.assign(w.centroid.begin(), w.centroid.end());

        std::size_t rep = w.members.front();
        double rep_dist = std::numeric_limits<double>::infinity();
        for (std::size_t pos : w.members) {
            const FramePtr& f = partition.frames[pos];
            cl.member_frame_ids.push_back(f->frame_id);
            cl.member_timestamps.push_back(f->timestamp);
            const double d = l2_distance(vectors[pos], w.centroid);
            // Members are visited in frame order, so strict < keeps the earliest on ties.
            if (d < rep_dist) {
                rep_dist = d;
                rep = pos;
            }
        }
        cl.index_frame_id = partition.frames[rep]->frame_id;
        out.push_back(std::move(cl));
    }
    return out;
}

}  // namespace venus
