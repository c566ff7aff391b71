#include "focus/image.h"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <string>

#include "focus/error.h"

namespace focus {

ImageTensor::ImageTensor(int height, int width, int channels,
                         std::vector<float> data)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0) {
    throw InvalidArgument("ImageTensor: height and width must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw InvalidArgument("ImageTensor: channels must be 1 or 3, got " +
                          std::to_string(channels));
  }
  const std::size_t expected =
      static_cast<std::size_t>(height) * width * channels;
  if (data.size() != expected) {
    throw InvalidArgument("ImageTensor: data length " +
                          std::to_string(data.size()) + " != H*W*C " +
                          std::to_string(expected));
  }
  const auto bad = std::find_if(data.begin(), data.end(), [](float v) {
    return !std::isfinite(v) || v < 0.0f || v > 1.0f;
  });
  if (bad != data.end()) {
    throw InvalidArgument("ImageTensor: element " +
                          std::to_string(bad - data.begin()) +
                          " outside [0,1] or not finite");
  }
  data_ = std::make_shared<const std::vector<float>>(std::move(data));
}

ImageTensor ImageTensor::filled(int height, int width, int channels,
                                float value) {
  const std::size_t n = static_cast<std::size_t>(std::max(height, 0)) *
                        std::max(width, 0) * std::max(channels, 0);
  return ImageTensor(height, width, channels, std::vector<float>(n, value));
}

bool operator==(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) return false;
  if (a.data_ == b.data_) return true;
  // Bitwise comparison: equal values with different bit patterns (only
  // possible for +0/-0 here) count as different.
  const auto da = a.data();
  const auto db = b.data();
  return std::equal(da.begin(), da.end(), db.begin(), [](float x, float y) {
    return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y);
  });
}

ImageContext::ImageContext(std::vector<ImageTensor> slots)
    : ImageContext(slots, std::vector<bool>(slots.size(), false)) {}

ImageContext::ImageContext(std::vector<ImageTensor> slots,
                           std::vector<bool> mask_flags)
    : slots_(std::move(slots)), mask_flags_(std::move(mask_flags)) {
  if (slots_.empty()) {
    throw InvalidArgument("ImageContext: at least one slot is required");
  }
  if (slots_.size() != mask_flags_.size()) {
    throw InvalidArgument("ImageContext: slots and mask_flags differ in length");
  }
}

}  // namespace focus
