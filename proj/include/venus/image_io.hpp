#pragma once
// PNG/JPEG codecs for frames and base64 for wire payloads.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "venus/core_types.hpp"

namespace venus::image {

/// Lossless RGB8 PNG encoding of the frame's pixel buffer.
std::vector<std::uint8_t> encode_png(const Frame& frame);

/// Decodes a PNG (any color type) into RGB8. Throws StorageError on bad input.
Frame decode_png(std::span<const std::uint8_t> bytes);

/// Decodes a baseline/progressive JPEG into RGB8. Throws StorageError on bad input.
Frame decode_jpeg(std::span<const std::uint8_t> bytes);

/// Writes atomically (temp file + rename).
void write_png(const std::filesystem::path& path, const Frame& frame);

/// Reads a PNG or JPEG file, chosen by extension. frame_id and timestamp are left at 0.
Frame read_image(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes `bytes` to a sibling temp file, flushes, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace venus::image
