#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "hlmt/types.hpp"

namespace hlmt::detail {

// Median of an unsorted scratch buffer (modified in place).
template <typename Scalar>
Scalar median_inplace(std::vector<Scalar>& v, MedianConvention conv) {
  const std::int64_t k = static_cast<std::int64_t>(v.size());
  const std::int64_t lower = (k + 1) / 2;  // ceil(k/2), 1-based
  auto mid = v.begin() + (lower - 1);
  std::nth_element(v.begin(), mid, v.end());
  const Scalar lo = *mid;
  if (conv == MedianConvention::LowerInf || (k % 2) == 1) return lo;
  const Scalar hi = *std::min_element(mid + 1, v.end());
  return (lo + hi) / Scalar(2);
}

}  // namespace hlmt::detail
