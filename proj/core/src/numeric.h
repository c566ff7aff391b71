#pragma once

#include <algorithm>
#include <span>

namespace focus::detail {

// Sum whose result does not depend on the order of `terms` (sorts in place
// first). Used wherever slot order must not leak into the bits of a result.
inline double order_free_sum(std::span<double> terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

}  // namespace focus::detail
