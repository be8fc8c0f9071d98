#pragma once
// Multimodal embedding and auxiliary detectors.
//
// Embedder is the seam for a real image-text encoder. MockEmbedder is a fixed,
// seedless construction used by tests and the synthetic pipeline: images are
// described by a color histogram plus channel statistics and pushed through a
// constant pseudo-random projection; text is a bag of hashed token vectors,
// except that color words map onto the projection of the matching solid color
// so that text queries can find images.

#include <functional>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "venus/core_types.hpp"

namespace venus {

enum class AuxKind { ocr_text, object_label };

struct AuxDetection {
    AuxKind kind = AuxKind::object_label;
    std::string value;
    double confidence = 0.0;

    bool valid() const noexcept { return !value.empty() && confidence >= 0.0 && confidence <= 1.0; }
    bool operator==(const AuxDetection&) const = default;
};

/// Minimum confidence for a detection to reach the prompt.
inline constexpr double kAuxConfidenceFloor = 0.5;

/// "objects: <labels sorted, comma-joined>; text: <ocr strings in order>".
/// Returns "" when nothing survives the confidence filter.
std::string build_aux_prompt(std::span<const AuxDetection> detections);

/// A set of lightweight detectors run on index frames.
class AuxModels {
public:
    using Detector = std::function<std::vector<AuxDetection>(const Frame&)>;

    AuxModels() = default;
    /// Only the dominant-color stub detector.
    static AuxModels stub();

    void add(Detector detector) { detectors_.push_back(std::move(detector)); }
    bool empty() const noexcept { return detectors_.empty(); }

    std::vector<AuxDetection> run(const Frame& frame) const;

private:
    std::vector<Detector> detectors_;
};

/// Names the dominant palette color of the frame; confidence is the fraction of
/// pixels nearest that color. Ties go to the lexicographically first name.
std::vector<AuxDetection> dominant_color_detector(const Frame& frame);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::uint32_t dimension() const = 0;
    virtual EmbeddingVector embed_image(const Frame& frame, const std::string& aux_prompt) const = 0;
    /// Throws std::invalid_argument("empty query") for blank input.
    virtual EmbeddingVector embed_text(const std::string& query) const = 0;
};

class MockEmbedder final : public Embedder {
public:
    /// Weight of the prompt vector relative to the unit image vector.
    static constexpr double kPromptWeight = 0.25;
    static constexpr std::size_t kHistogramBins = 64;
    static constexpr std::size_t kFeatureLength = kHistogramBins + 6;

    explicit MockEmbedder(std::uint32_t dimension = 256);

    std::uint32_t dimension() const override { return dimension_; }
    EmbeddingVector embed_image(const Frame& frame, const std::string& aux_prompt) const override;
    EmbeddingVector embed_text(const std::string& query) const override;

    /// 4x4x4 RGB histogram (sums to 1), then channel means and variances in [0,1] units.
    static std::vector<double> image_features(const Frame& frame);
    static std::vector<std::string> tokenize(const std::string& text);

private:
    std::vector<double> project(const std::vector<double>& features) const;
    std::vector<double> token_vector(const std::string& token) const;
    /// Unnormalized sum of token vectors; empty if there are no tokens.
    std::vector<double> bag_of_tokens(const std::string& text) const;

    std::uint32_t dimension_;
    std::vector<double> projection_;  // dimension_ x kFeatureLength, row-major
};

/// Talks to an embedding service: POST <endpoint>/embed with
/// {"modality", "data", "aux_prompt"}; expects {"vector": [...]}.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(EmbedderDescriptor descriptor);

    std::uint32_t dimension() const override { return descriptor_.dimension; }
    EmbeddingVector embed_image(const Frame& frame, const std::string& aux_prompt) const override;
    EmbeddingVector embed_text(const std::string& query) const override;

private:
    EmbeddingVector post(const std::string& body) const;

    EmbedderDescriptor descriptor_;
    std::string base_url_;
    std::string path_prefix_;
    mutable std::counting_semaphore<> in_flight_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderDescriptor& descriptor);

/// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint);

}  // namespace venus
