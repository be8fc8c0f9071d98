#pragma once
// Frame sources: a directory of PNG/JPEG images or a scripted synthetic stream.

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "venus/core_types.hpp"

namespace venus {

struct SceneScript {
    double duration_s = 1.0;
    std::array<std::uint8_t, 3> base_color{0, 0, 0};
    /// Per-pixel uniform noise amplitude as a fraction of full scale.
    double noise_level = 0.0;
    /// Brightness change per second as a fraction of full scale.
    double drift = 0.0;
    /// Optional color word the scene represents (for ground truth only).
    std::string label;
};

enum class SourceKind { image_directory, synthetic };

struct StreamSourceSpec {
    SourceKind kind = SourceKind::synthetic;
    double fps = 1.0;
    std::filesystem::path directory;
    std::uint32_t width = 32;
    std::uint32_t height = 32;
    std::uint64_t seed = 0;
    std::vector<SceneScript> scenes;

    /// Empty when valid.
    std::vector<std::string> check() const;
    std::size_t synthetic_frame_count() const;

    nlohmann::json to_json() const;
    /// Accepts {"kind": "synthetic"|"image_directory", ...}. base_color may be
    /// [r,g,b] or one of the named palette colors. Throws std::invalid_argument.
    static StreamSourceSpec from_json(const nlohmann::json& j);
};

/// Pull-style frame producer.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    /// Next frame, or nullptr at end of stream.
    virtual FramePtr next() = 0;
    /// Ground-truth scene index of a frame, when the source knows it.
    virtual std::optional<std::size_t> scene_of(FrameId id) const = 0;
};

/// Deterministic synthetic stream: frame i has timestamp i / fps; each scene
/// contributes ceil(duration_s * fps) frames of its base color plus drift and
/// seeded per-frame noise.
class SyntheticSource final : public FrameSource {
public:
    explicit SyntheticSource(StreamSourceSpec spec);
    FramePtr next() override;
    std::optional<std::size_t> scene_of(FrameId id) const override;

    std::size_t frame_count() const noexcept { return scene_of_frame_.size(); }
    /// Renders frame `id` directly; same pixels as the streamed frame.
    Frame render(FrameId id) const;

private:
    StreamSourceSpec spec_;
    std::vector<std::size_t> scene_of_frame_;
    std::vector<std::size_t> scene_first_frame_;
    FrameId cursor_ = 0;
};

/// Images ordered by filename, or by numeric value when every stem is numeric
/// (the stem is then the timestamp in seconds). Otherwise timestamps are i / fps.
class DirectorySource final : public FrameSource {
public:
    DirectorySource(const std::filesystem::path& directory, double fps);
    FramePtr next() override;
    std::optional<std::size_t> scene_of(FrameId) const override { return std::nullopt; }

    std::size_t frame_count() const noexcept { return files_.size(); }

private:
    std::vector<std::filesystem::path> files_;
    std::vector<double> timestamps_;
    std::size_t cursor_ = 0;
};

std::unique_ptr<FrameSource> make_source(const StreamSourceSpec& spec);

/// RGB value of a named palette color ("red", "green", ...); nullopt if unknown.
std::optional<std::array<std::uint8_t, 3>> named_color(const std::string& name);

}  // namespace venus
