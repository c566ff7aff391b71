#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace focus {

// Standard base64 (RFC 4648) with '=' padding.
std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws InvalidArgument on characters outside the alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

// float32 values packed little-endian, independent of host byte order.
std::vector<std::uint8_t> pack_f32_le(std::span<const float> values);
std::vector<float> unpack_f32_le(std::span<const std::uint8_t> bytes);

}  // namespace focus
