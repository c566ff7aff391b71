#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace focus {

// H x W x C pixel array with values in [0, 1], row-major HWC.
//
// Immutable after construction. Copies share the pixel buffer, so passing
// images between contexts and threads is cheap and never aliases a mutable
// buffer.
class ImageTensor {
 public:
  // Throws InvalidArgument unless height, width > 0, channels is 1 or 3,
  // data.size() == H*W*C and every value is finite and inside [0, 1].
  ImageTensor(int height, int width, int channels, std::vector<float> data);

  static ImageTensor filled(int height, int width, int channels, float value);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_->size(); }
  std::span<const float> data() const noexcept { return *data_; }

  float at(int y, int x, int c) const noexcept {
    return (*data_)[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  bool same_shape(const ImageTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  // True when both tensors share one buffer (not merely equal contents).
  bool shares_buffer(const ImageTensor& other) const noexcept {
    return data_ == other.data_;
  }

  friend bool operator==(const ImageTensor& a, const ImageTensor& b);

 private:
  int height_;
  int width_;
  int channels_;
  std::shared_ptr<const std::vector<float>> data_;
};

// Ordered image slots; mask_flags[i] marks a noise-corrupted slot. The slot
// order is fixed at construction.
class ImageContext {
 public:
  // All slots unmasked.
  explicit ImageContext(std::vector<ImageTensor> slots);
  ImageContext(std::vector<ImageTensor> slots, std::vector<bool> mask_flags);

  std::size_t size() const noexcept { return slots_.size(); }
  const std::vector<ImageTensor>& slots() const noexcept { return slots_; }
  const std::vector<bool>& mask_flags() const noexcept { return mask_flags_; }
  const ImageTensor& slot(std::size_t i) const { return slots_.at(i); }
  bool masked(std::size_t i) const { return mask_flags_.at(i); }

 private:
  std::vector<ImageTensor> slots_;
  std::vector<bool> mask_flags_;
};

}  // namespace focus
