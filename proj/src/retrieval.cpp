#include "venus/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace venus {

namespace {

constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kFrameStream = 2;

// Slack for comparisons on sums of probabilities, e.g. nine draws of 0.1
// summing to 0.8999999999999999 against theta = 0.9.
constexpr double kMassSlack = 1e-12;
constexpr double kRatioSlack = 1e-9;

double distinct_mass(const QueryDistribution& dist, const std::vector<IndexId>& selected) {
    double sum = 0.0;
    for (IndexId id : selected) sum += dist.probability_of(id);
    return sum;
}

std::vector<std::pair<IndexId, double>> plan_of(const QueryDistribution& dist) {
    std::vector<std::pair<IndexId, double>> plan;
    plan.reserve(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
        plan.emplace_back(dist.index_ids[i], dist.probabilities[i]);
    }
    return plan;
}

QueryDistribution distribution_for(const EmbeddingVector& query, const Snapshot& snapshot,
                                   double temperature, std::optional<TimeRange> range) {
    if (snapshot.empty()) throw EmptyMemoryError();
    const auto scores = snapshot.similarity_search(query, range);
    if (scores.empty()) throw EmptyMemoryError();
    return softmax_distribution(scores, temperature);
}

RetrievalResult finish(std::string strategy, const QueryDistribution& dist, DrawCounts counts,
                       std::uint32_t draws, const Snapshot& snapshot, std::uint64_t seed) {
    RetrievalResult r;
    r.strategy = std::move(strategy);
    for (const auto& [id, n] : counts) r.selected_index_ids.push_back(id);
    r.cumulative_probability = distinct_mass(dist, r.selected_index_ids);
    r.draws = draws;
    Keyframes k = draw_cluster_frames(counts, snapshot, rng::derive(seed, kFrameStream));
    r.keyframe_ids = std::move(k.ids);
    r.keyframe_timestamps = std::move(k.timestamps);
    r.counts = std::move(counts);
    r.plan_distribution = plan_of(dist);
    return r;
}

}  // namespace

double QueryDistribution::max_probability() const {
    if (probabilities.empty()) throw std::logic_error("empty distribution");
    return *std::max_element(probabilities.begin(), probabilities.end());
}

double QueryDistribution::probability_of(IndexId id) const {
    // index_ids is ascending when built from a similarity search; fall back to a scan otherwise.
    auto it = std::lower_bound(index_ids.begin(), index_ids.end(), id);
    if (it == index_ids.end() || *it != id) {
        it = std::find(index_ids.begin(), index_ids.end(), id);
        if (it == index_ids.end()) {
            throw std::out_of_range("index " + std::to_string(id) + " not in distribution");
        }
    }
    return probabilities[static_cast<std::size_t>(it - index_ids.begin())];
}

QueryDistribution softmax_distribution(std::span<const ScoredIndex> scores, double temperature) {
    if (scores.empty()) throw std::invalid_argument("softmax_distribution: empty score list");
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("softmax_distribution: temperature must be positive");
    }
    QueryDistribution d;
    d.temperature = temperature;
    d.index_ids.reserve(scores.size());
    d.scores.reserve(scores.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& s : scores) {
        d.index_ids.push_back(s.index_id);
        d.scores.push_back(s.score);
        peak = std::max(peak, s.score / temperature);
    }
    d.probabilities.resize(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        d.probabilities[i] = std::exp(d.scores[i] / temperature - peak);
        total += d.probabilities[i];
    }
    for (double& p : d.probabilities) p /= total;
    return d;
}

CategoricalSampler::CategoricalSampler(const QueryDistribution& dist) {
    if (dist.probabilities.empty()) throw std::invalid_argument("sampler: empty distribution");
    cumulative_.resize(dist.probabilities.size());
    std::partial_sum(dist.probabilities.begin(), dist.probabilities.end(), cumulative_.begin());
}

std::size_t CategoricalSampler::draw(rng::Engine& engine) const {
    const double u = rng::uniform01(engine) * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

DrawCounts sample_counts(const QueryDistribution& dist, std::uint32_t draws, std::uint64_t seed) {
    if (draws == 0) throw std::invalid_argument("sample_counts: need at least one draw");
    CategoricalSampler sampler(dist);
    rng::Engine engine(rng::derive(seed, kSampleStream));
    DrawCounts counts;
    for (std::uint32_t i = 0; i < draws; ++i) ++counts[dist.index_ids[sampler.draw(engine)]];
    return counts;
}

std::uint32_t akr_min_draws(double max_probability, double theta, double beta) {
    if (!(max_probability > 0.0)) throw std::invalid_argument("akr_min_draws: max_p must be > 0");
    const double steps = std::ceil(theta / max_probability - kRatioSlack);
    const double n = std::ceil(beta * std::max(1.0, steps) - kRatioSlack);
    return static_cast<std::uint32_t>(std::clamp(n, 1.0, 4294967295.0));
}

AdaptiveDraws adaptive_sample(const QueryDistribution& dist, double theta, double beta,
                              std::uint32_t n_max, std::uint64_t seed) {
    if (n_max == 0) throw std::invalid_argument("adaptive_sample: n_max must be at least 1");
    if (!(beta > 0.0)) throw std::invalid_argument("adaptive_sample: beta must be positive");

    AdaptiveDraws out;
    out.min_draws = akr_min_draws(dist.max_probability(), theta, beta);

    CategoricalSampler sampler(dist);
    rng::Engine engine(rng::derive(seed, kSampleStream));
    std::set<IndexId> selected;
    double mass = 0.0;
    while (out.draws < n_max) {
        const std::size_t pos = sampler.draw(engine);
        const IndexId id = dist.index_ids[pos];
        ++out.counts[id];
        ++out.draws;
        if (selected.insert(id).second) mass += dist.probabilities[pos];
        if (mass / beta >= theta - kMassSlack && out.draws >= out.min_draws) {
            out.threshold_reached = true;
            break;
        }
    }
    out.selected.assign(selected.begin(), selected.end());
    out.cumulative_probability = distinct_mass(dist, out.selected);
    return out;
}

Keyframes draw_cluster_frames(const DrawCounts& counts, const Snapshot& snapshot,
                              std::uint64_t seed) {
    rng::Engine engine(seed);
    std::vector<std::pair<double, FrameId>> picked;
    for (const auto& [id, n] : counts) {
        if (n == 0) continue;
        const Cluster& c = snapshot.cluster_of(id);
        const std::size_t size = c.member_frame_ids.size();
        const std::size_t take = std::min<std::size_t>(n, size);
        // Partial Fisher-Yates over member positions.
        std::vector<std::size_t> order(size);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + rng::uniform_below(engine, size - i);
            std::swap(order[i], order[j]);
            picked.emplace_back(c.member_timestamps[order[i]], c.member_frame_ids[order[i]]);
        }
    }
    std::sort(picked.begin(), picked.end());
    picked.erase(std::unique(picked.begin(), picked.end(),
                             [](const auto& a, const auto& b) { return a.second == b.second; }),
                 picked.end());
    Keyframes k;
    for (const auto& [t, id] : picked) {
        k.ids.push_back(id);
        k.timestamps.push_back(t);
    }
    return k;
}

RetrievalResult retrieve_fixed(const EmbeddingVector& query, const Snapshot& snapshot,
                               const RetrievalConfig& config, std::optional<TimeRange> range) {
    if (!config.n_fixed || *config.n_fixed == 0) {
        throw std::invalid_argument("retrieve_fixed: n_fixed must be set");
    }
    const QueryDistribution dist = distribution_for(query, snapshot, config.temperature, range);
    DrawCounts counts = sample_counts(dist, *config.n_fixed, config.seed);
    return finish("fixed", dist, std::move(counts), *config.n_fixed, snapshot, config.seed);
}

RetrievalResult retrieve_adaptive(const EmbeddingVector& query, const Snapshot& snapshot,
                                  const RetrievalConfig& config, std::optional<TimeRange> range) {
    const QueryDistribution dist = distribution_for(query, snapshot, config.temperature, range);
    AdaptiveDraws a = adaptive_sample(dist, config.theta, config.beta, config.n_max, config.seed);
    return finish("akr", dist, std::move(a.counts), a.draws, snapshot, config.seed);
}

RetrievalResult retrieve_topk(const EmbeddingVector& query, const Snapshot& snapshot,
                              std::uint32_t k, double temperature,
                              std::optional<TimeRange> range) {
    if (k == 0) throw std::invalid_argument("retrieve_topk: k must be at least 1");
    const QueryDistribution dist = distribution_for(query, snapshot, temperature, range);

    std::vector<std::size_t> order(dist.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dist.scores[a] != dist.scores[b]) return dist.scores[a] > dist.scores[b];
        return dist.index_ids[a] < dist.index_ids[b];
    });
    order.resize(std::min<std::size_t>(k, order.size()));

    RetrievalResult r;
    r.strategy = "topk";
    std::vector<std::pair<double, FrameId>> frames;
    for (std::size_t pos : order) {
        const IndexId id = dist.index_ids[pos];
        r.counts[id] = 1;
        const IndexedFrame& rec = snapshot.record(id);
        frames.emplace_back(rec.timestamp, rec.frame_id);
    }
    for (const auto& [id, n] : r.counts) r.selected_index_ids.push_back(id);
    r.draws = static_cast<std::uint32_t>(order.size());
    r.cumulative_probability = distinct_mass(dist, r.selected_index_ids);
    std::sort(frames.begin(), frames.end());
    for (const auto& [t, id] : frames) {
        r.keyframe_ids.push_back(id);
        r.keyframe_timestamps.push_back(t);
    }
    r.plan_distribution = plan_of(dist);
    return r;
}

}  // namespace venus
