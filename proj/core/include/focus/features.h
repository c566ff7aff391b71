#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "focus/image.h"

namespace focus {

using FeatureVector = std::vector<double>;

constexpr int kChannelMeanDims = 3;

// Synthetic vision encoder. Layout: per-channel means (3 dims; a single
// channel is replicated) followed by a (feature_dim - 3)-bin intensity
// histogram over all elements, as fractions. Bins are [b/B, (b+1)/B) with 1.0
// in the top bin. Every component lies in [0, 1]. feature_dim must be >= 4.
FeatureVector image_features(const ImageTensor& image, int feature_dim = 8);

// g_k = (1 - beta) f_k + beta * mean_{j != k} f_j. With one slot, g = f_0.
// Throws InvalidArgument for an out-of-range slot, beta outside [0, 1], or
// mismatched feature lengths.
FeatureVector contaminated_features(std::span<const FeatureVector> features,
                                    std::size_t target_slot, double beta);

// How readable an image is, in [0, 1]. Let r be the fraction of adjacent
// element pairs (horizontal and vertical, same channel) differing by more
// than 0.05; legibility is 1 for r <= 0.25, 0 for r >= 0.5 and linear in
// between. Piecewise-flat renderings score 1; noise-masked images drop
// towards 0.
double legibility(const ImageTensor& image);

// Cosine similarity. If either vector has zero norm, returns 0 and sets
// *zero_norm (when given).
double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         bool* zero_norm = nullptr);

}  // namespace focus
