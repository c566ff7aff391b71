#include "focus/features.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "focus/error.h"
#include "numeric.h"

namespace focus {
namespace {

constexpr float kEdgeThreshold = 0.05f;
constexpr double kRoughLow = 0.25;
constexpr double kRoughHigh = 0.5;

}  // namespace

FeatureVector image_features(const ImageTensor& image, int feature_dim) {
  if (feature_dim <= kChannelMeanDims) {
    throw InvalidArgument("image_features: feature_dim must be >= 4");
  }
  const int bins = feature_dim - kChannelMeanDims;
  const int channels = image.channels();
  const auto data = image.data();
  const std::size_t pixels = data.size() / channels;

  std::vector<double> sums(channels, 0.0);
  std::vector<std::size_t> counts(bins, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    sums[i % channels] += data[i];
    const int bin =
        std::min(bins - 1, static_cast<int>(static_cast<double>(data[i]) * bins));
    ++counts[bin];
  }

  FeatureVector out(feature_dim, 0.0);
  for (int c = 0; c < kChannelMeanDims; ++c) {
    out[c] = sums[channels == 1 ? 0 : c] / static_cast<double>(pixels);
  }
  for (int b = 0; b < bins; ++b) {
    out[kChannelMeanDims + b] =
        static_cast<double>(counts[b]) / static_cast<double>(data.size());
  }
  return out;
}

FeatureVector contaminated_features(std::span<const FeatureVector> features,
                                    std::size_t target_slot, double beta) {
  if (features.empty() || target_slot >= features.size()) {
    throw InvalidArgument("contaminated_features: slot " +
                          std::to_string(target_slot) + " out of range for " +
                          std::to_string(features.size()) + " images");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw InvalidArgument("contaminated_features: beta must lie in [0,1]");
  }
  const FeatureVector& own = features[target_slot];
  for (const auto& f : features) {
    if (f.size() != own.size()) {
      throw InvalidArgument("contaminated_features: feature length mismatch");
    }
  }
  if (features.size() == 1) return own;

  const double others = static_cast<double>(features.size() - 1);
  FeatureVector out(own.size());
  std::vector<double> terms;
  terms.reserve(features.size() - 1);
  for (std::size_t d = 0; d < own.size(); ++d) {
    terms.clear();
    for (std::size_t j = 0; j < features.size(); ++j) {
      if (j != target_slot) terms.push_back(features[j][d]);
    }
    const double mean = detail::order_free_sum(terms) / others;
    out[d] = (1.0 - beta) * own[d] + beta * mean;
  }
  return out;
}

double legibility(const ImageTensor& image) {
  const int h = image.height();
  const int w = image.width();
  const int c = image.channels();
  std::size_t pairs = 0;
  std::size_t rough = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        const float v = image.at(y, x, ch);
        if (x + 1 < w) {
          ++pairs;
          if (std::fabs(v - image.at(y, x + 1, ch)) > kEdgeThreshold) ++rough;
        }
        if (y + 1 < h) {
          ++pairs;
          if (std::fabs(v - image.at(y + 1, x, ch)) > kEdgeThreshold) ++rough;
        }
      }
    }
  }
  if (pairs == 0) return 1.0;
  const double r = static_cast<double>(rough) / static_cast<double>(pairs);
  return std::clamp((kRoughHigh - r) / (kRoughHigh - kRoughLow), 0.0, 1.0);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         bool* zero_norm) {
  if (a.size() != b.size()) {
    throw InvalidArgument("cosine_similarity: length mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (zero_norm) *zero_norm = false;
  if (na == 0.0 || nb == 0.0) {
    if (zero_norm) *zero_norm = true;
    return 0.0;
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace focus
