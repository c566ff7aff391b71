#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "focus/image.h"

namespace focus {

// 8-bit PNG (gray or RGB). Encoding rounds each value to the nearest k/255,
// so only images already on that grid survive a round trip unchanged.
std::vector<std::uint8_t> encode_png(const ImageTensor& image);
// Gray, gray+alpha, RGB, RGBA, palette and 16-bit inputs are accepted;
// alpha is dropped. Throws InvalidArgument on malformed data.
ImageTensor decode_png(std::span<const std::uint8_t> bytes);

ImageTensor read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageTensor& image);

}  // namespace focus
