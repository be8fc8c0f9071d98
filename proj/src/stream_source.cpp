#include "venus/stream_source.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "venus/image_io.hpp"
#include "venus/rng.hpp"

namespace venus {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<std::array<std::uint8_t, 3>> named_color(const std::string& name) {
    static const std::pair<const char*, std::array<std::uint8_t, 3>> table[] = {
        {"black", {0, 0, 0}},       {"white", {255, 255, 255}}, {"gray", {128, 128, 128}},
        {"red", {255, 0, 0}},       {"green", {0, 255, 0}},     {"blue", {0, 0, 255}},
        {"yellow", {255, 255, 0}},  {"cyan", {0, 255, 255}},    {"magenta", {255, 0, 255}},
    };
    for (const auto& [n, rgb] : table) {
        if (name == n) return rgb;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Spec

std::vector<std::string> StreamSourceSpec::check() const {
    std::vector<std::string> problems;
    if (!(fps > 0.0) || !std::isfinite(fps)) problems.push_back("fps must be positive");
    if (kind == SourceKind::synthetic) {
        if (scenes.empty()) problems.push_back("synthetic script needs at least one scene");
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            if (!(scenes[i].duration_s > 0.0)) {
                problems.push_back("scene " + std::to_string(i) + " needs a positive duration");
            }
            if (scenes[i].noise_level < 0.0) {
                problems.push_back("scene " + std::to_string(i) + " has negative noise");
            }
        }
        if (width == 0 || height == 0) problems.push_back("synthetic frames need a positive size");
    } else if (directory.empty()) {
        problems.push_back("image_directory source needs a directory");
    }
    return problems;
}

std::size_t StreamSourceSpec::synthetic_frame_count() const {
    std::size_t n = 0;
    for (const auto& s : scenes) {
        n += static_cast<std::size_t>(std::ceil(s.duration_s * fps - 1e-9));
    }
    return n;
}

json StreamSourceSpec::to_json() const {
    json j = {{"kind", kind == SourceKind::synthetic ? "synthetic" : "image_directory"},
              {"fps", fps}};
    if (kind == SourceKind::image_directory) {
        j["directory"] = directory.string();
        return j;
    }
    j["width"] = width;
    j["height"] = height;
    j["seed"] = seed;
    json sc = json::array();
    for (const auto& s : scenes) {
        json e = {{"duration_s", s.duration_s},
                  {"base_color", {s.base_color[0], s.base_color[1], s.base_color[2]}},
                  {"noise_level", s.noise_level},
                  {"drift", s.drift}};
        if (!s.label.empty()) e["label"] = s.label;
        sc.push_back(std::move(e));
    }
    j["scenes"] = std::move(sc);
    return j;
}

StreamSourceSpec StreamSourceSpec::from_json(const json& j) {
    StreamSourceSpec spec;
    try {
        const std::string kind = j.value("kind", std::string("synthetic"));
        if (kind == "synthetic") spec.kind = SourceKind::synthetic;
        else if (kind == "image_directory") spec.kind = SourceKind::image_directory;
        else throw std::invalid_argument("unknown source kind '" + kind + "'");
        spec.fps = j.value("fps", spec.fps);
        if (spec.kind == SourceKind::image_directory) {
            spec.directory = j.at("directory").get<std::string>();
        } else {
            spec.width = j.value("width", spec.width);
            spec.height = j.value("height", spec.height);
            spec.seed = j.value("seed", spec.seed);
            for (const auto& s : j.at("scenes")) {
                SceneScript scene;
                scene.duration_s = s.at("duration_s").get<double>();
                scene.noise_level = s.value("noise_level", 0.0);
                scene.drift = s.value("drift", 0.0);
                scene.label = s.value("label", std::string());
                const json& color = s.at("base_color");
                if (color.is_string()) {
                    auto rgb = named_color(color.get<std::string>());
                    if (!rgb) {
                        throw std::invalid_argument("unknown color '" + color.get<std::string>() +
                                                    "'");
                    }
                    scene.base_color = *rgb;
                    if (scene.label.empty()) scene.label = color.get<std::string>();
                } else {
                    const auto rgb = color.get<std::vector<int>>();
                    if (rgb.size() != 3) throw std::invalid_argument("base_color needs 3 channels");
                    for (int c = 0; c < 3; ++c) {
                        scene.base_color[c] = static_cast<std::uint8_t>(std::clamp(rgb[c], 0, 255));
                    }
                }
                spec.scenes.push_back(std::move(scene));
            }
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("stream source: ") + e.what());
    }
    if (auto problems = spec.check(); !problems.empty()) {
        throw std::invalid_argument("stream source: " + problems.front());
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Synthetic

SyntheticSource::SyntheticSource(StreamSourceSpec spec) : spec_(std::move(spec)) {
    if (auto problems = spec_.check(); !problems.empty()) {
        throw std::invalid_argument("synthetic source: " + problems.front());
    }
    for (std::size_t s = 0; s < spec_.scenes.size(); ++s) {
        scene_first_frame_.push_back(scene_of_frame_.size());
        const auto n = static_cast<std::size_t>(std::ceil(spec_.scenes[s].duration_s * spec_.fps - 1e-9));
        scene_of_frame_.insert(scene_of_frame_.end(), n, s);
    }
}

Frame SyntheticSource::render(FrameId id) const {
    if (id >= scene_of_frame_.size()) throw std::out_of_range("synthetic frame out of range");
    const std::size_t s = scene_of_frame_[id];
    const SceneScript& scene = spec_.scenes[s];

    Frame f;
    f.frame_id = id;
    f.timestamp = static_cast<double>(id) / spec_.fps;
    f.width = spec_.width;
    f.height = spec_.height;
    f.pixels.resize(f.pixel_count() * 3);

    const double elapsed = static_cast<double>(id - scene_first_frame_[s]) / spec_.fps;
    const double shift = scene.drift * elapsed * 255.0;
    rng::Engine engine(rng::derive(spec_.seed, id));
    for (std::size_t i = 0; i < f.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) {
            double v = scene.base_color[c] + shift;
            if (scene.noise_level > 0.0) {
                v += (2.0 * rng::uniform01(engine) - 1.0) * scene.noise_level * 255.0;
            }
            f.pixels[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return f;
}

FramePtr SyntheticSource::next() {
    if (cursor_ >= scene_of_frame_.size()) return nullptr;
    return std::make_shared<const Frame>(render(cursor_++));
}

std::optional<std::size_t> SyntheticSource::scene_of(FrameId id) const {
    if (id >= scene_of_frame_.size()) return std::nullopt;
    return scene_of_frame_[id];
}

// ---------------------------------------------------------------------------
// Directory

namespace {

std::optional<double> numeric_stem(const fs::path& p) {
    const std::string stem = p.stem().string();
    double v = 0.0;
    const auto [end, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), v);
    if (ec != std::errc() || end != stem.data() + stem.size()) return std::nullopt;
    return v;
}

}  // namespace

DirectorySource::DirectorySource(const fs::path& directory, double fps) {
    if (!(fps > 0.0)) throw std::invalid_argument("directory source: fps must be positive");
    if (!fs::is_directory(directory)) {
        throw StorageError("directory source: " + directory.string() + " is not a directory");
    }
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files_.push_back(entry.path());
    }
    const bool all_numeric = !files_.empty() && std::all_of(files_.begin(), files_.end(),
        [](const fs::path& p) { return numeric_stem(p).has_value(); });
    if (all_numeric) {
        std::stable_sort(files_.begin(), files_.end(), [](const fs::path& a, const fs::path& b) {
            const double ta = *numeric_stem(a), tb = *numeric_stem(b);
            return ta != tb ? ta < tb : a.filename() < b.filename();
        });
        for (const auto& p : files_) timestamps_.push_back(*numeric_stem(p));
    } else {
        std::sort(files_.begin(), files_.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
        for (std::size_t i = 0; i < files_.size(); ++i) timestamps_.push_back(i / fps);
    }
}

FramePtr DirectorySource::next() {
    if (cursor_ >= files_.size()) return nullptr;
    Frame f;
    try {
        f = image::read_image(files_[cursor_]);
    } catch (const std::exception& e) {
        throw StorageError("frame " + std::to_string(cursor_) + " (" + files_[cursor_].string() +
                           "): " + e.what());
    }
    f.frame_id = cursor_;
    f.timestamp = timestamps_[cursor_];
    ++cursor_;
    return std::make_shared<const Frame>(std::move(f));
}

std::unique_ptr<FrameSource> make_source(const StreamSourceSpec& spec) {
    if (spec.kind == SourceKind::synthetic) return std::make_unique<SyntheticSource>(spec);
    return std::make_unique<DirectorySource>(spec.directory, spec.fps);
}

}  // namespace venus
