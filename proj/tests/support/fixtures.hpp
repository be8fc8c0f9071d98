#pragma once
// Frame builders and scratch directories shared by the test binaries.

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>

#include "venus/core_types.hpp"

namespace venus::test {

inline Frame solid(std::uint32_t w, std::uint32_t h, std::array<std::uint8_t, 3> rgb,
                   FrameId id = 0, double ts = 0.0) {
    Frame f;
    f.frame_id = id;
    f.timestamp = ts;
    f.width = w;
    f.height = h;
    f.pixels.resize(std::size_t{w} * h * 3);
    for (std::size_t i = 0; i < std::size_t{w} * h; ++i) {
        for (int c = 0; c < 3; ++c) f.pixels[i * 3 + c] = rgb[c];
    }
    return f;
}

inline Frame random_frame(std::mt19937_64& gen, std::uint32_t w, std::uint32_t h, FrameId id = 0,
                          double ts = 0.0) {
    Frame f = solid(w, h, {0, 0, 0}, id, ts);
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(gen() & 0xFF);
    return f;
}

/// Solid color plus uniform noise of +-amplitude (0..255 units), clamped.
inline Frame noisy(std::mt19937_64& gen, std::uint32_t w, std::uint32_t h,
                   std::array<std::uint8_t, 3> rgb, int amplitude, FrameId id = 0,
                   double ts = 0.0) {
    Frame f = solid(w, h, rgb, id, ts);
    std::uniform_int_distribution<int> d(-amplitude, amplitude);
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(std::clamp(int(p) + d(gen), 0, 255));
    return f;
}

inline FramePtr share(Frame f) { return std::make_shared<const Frame>(std::move(f)); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "venus") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

}  // namespace venus::test
