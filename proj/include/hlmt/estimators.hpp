#pragma once

// Hodges-Lehmann point estimators and the Walsh-average U-process.
//
// hl_one_sample(x)  = median{(x_i + x_j)/2 : i < j}
// hl_two_sample(x,y)= median{x_i - y_j}
// u_process_eval    = fraction of Walsh averages <= t
//
// The i < j pair set gives the same median as i != j, with half the pairs.
// All medians go through the selection kernels in select.hpp, so no pair set
// is ever materialized.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "hlmt/median.hpp"
#include "hlmt/rng.hpp"
#include "hlmt/select.hpp"
#include "hlmt/types.hpp"

namespace hlmt {

namespace detail {

template <typename Scalar>
std::vector<Scalar> sorted_values(const UnivariateSample<Scalar>& x, bool descending = false) {
  std::vector<Scalar> v(x.values.data(), x.values.data() + x.values.size());
  if (descending) {
    std::sort(v.begin(), v.end(), std::greater<Scalar>());
  } else {
    std::sort(v.begin(), v.end());
  }
  return v;
}

// HL estimate over a sorted buffer: one selection for odd pair counts and the
// LowerInf convention, two middle ranks averaged otherwise.
template <typename Scalar>
Scalar hl_from_sorted(const Scalar* x, std::int64_t n, MedianConvention conv) {
  const std::int64_t pairs = n * (n - 1) / 2;
  const std::int64_t lower = (pairs + 1) / 2;
  if (conv == MedianConvention::LowerInf || (pairs % 2) == 1) {
    return kth_walsh_sorted(x, n, lower);
  }
  Scalar next;
  const Scalar lo = kth_walsh_sorted(x, n, lower, &next);
  return (lo + next) / Scalar(2);
}

template <typename Scalar>
Scalar hl_diff_from_sorted(const Scalar* x, std::int64_t n, const Scalar* ydesc, std::int64_t m,
                           MedianConvention conv) {
  const std::int64_t pairs = n * m;
  const std::int64_t lower = (pairs + 1) / 2;
  if (conv == MedianConvention::LowerInf || (pairs % 2) == 1) {
    return kth_diff_sorted(x, n, ydesc, m, lower);
  }
  Scalar next;
  const Scalar lo = kth_diff_sorted(x, n, ydesc, m, lower, &next);
  return (lo + next) / Scalar(2);
}

}  // namespace detail

template <typename Scalar>
HLEstimate<Scalar> hl_one_sample(const UnivariateSample<Scalar>& x,
                                 MedianConvention conv = MedianConvention::Midpoint) {
  const std::int64_t n = x.size();
  if (n < 2) throw Error(ErrorCode::SampleTooSmall, "one-sample HL estimate needs n >= 2");
  const auto xs = detail::sorted_values(x);
  return {detail::hl_from_sorted(xs.data(), n, conv), n * (n - 1) / 2, conv};
}

template <typename Scalar>
HLEstimate<Scalar> hl_two_sample(const PairedSamples<Scalar>& s,
                                 MedianConvention conv = MedianConvention::Midpoint) {
  const std::int64_t n = s.x.size();
  const std::int64_t m = s.y.size();
  const auto xs = detail::sorted_values(s.x);
  const auto yd = detail::sorted_values(s.y, /*descending=*/true);
  return {detail::hl_diff_from_sorted(xs.data(), n, yd.data(), m, conv), n * m, conv};
}

// k-th smallest Walsh average (1-based rank) without materializing the pairs.
template <typename Scalar>
Scalar select_walsh_kth(const UnivariateSample<Scalar>& x, std::int64_t k) {
  const std::int64_t n = x.size();
  if (n < 2) throw Error(ErrorCode::SampleTooSmall, "walsh selection needs n >= 2");
  const auto xs = detail::sorted_values(x);
  return detail::kth_walsh_sorted(xs.data(), n, k);
}

// k-th smallest difference x_i - y_j (1-based rank).
template <typename Scalar>
Scalar select_diff_kth(const PairedSamples<Scalar>& s, std::int64_t k) {
  const auto xs = detail::sorted_values(s.x);
  const auto yd = detail::sorted_values(s.y, /*descending=*/true);
  return detail::kth_diff_sorted(xs.data(), static_cast<std::int64_t>(xs.size()), yd.data(),
                                 static_cast<std::int64_t>(yd.size()), k);
}

// U_n(t): fraction of Walsh averages at or below t.
template <typename Scalar>
double u_process_eval(const UnivariateSample<Scalar>& x, Scalar t) {
  const std::int64_t n = x.size();
  if (n < 2) throw Error(ErrorCode::SampleTooSmall, "U-process needs n >= 2");
  const auto xs = detail::sorted_values(x);
  const std::int64_t pairs = n * (n - 1) / 2;
  const std::int64_t cnt = detail::count_walsh_le(xs.data(), n, Scalar(2) * t);
  return static_cast<double>(cnt) / static_cast<double>(pairs);
}

template <typename Scalar>
Scalar sample_median(const UnivariateSample<Scalar>& x,
                     MedianConvention conv = MedianConvention::Midpoint) {
  std::vector<Scalar> v(x.values.data(), x.values.data() + x.values.size());
  return detail::median_inplace(v, conv);
}

// Subsampling estimator: median of floor(n/2) non-overlapping pair averages
// under a random permutation, averaged over num_permutations permutations.
// For odd n the unpaired trailing element of each permutation is dropped.
template <typename Scalar>
Scalar nonoverlap_pair_estimate(const UnivariateSample<Scalar>& x, std::int64_t num_permutations,
                                std::uint64_t seed) {
  const std::int64_t n = x.size();
  if (n < 4) throw Error(ErrorCode::SampleTooSmall, "pair subsampling needs n >= 4");
  if (num_permutations < 1) {
    throw Error(ErrorCode::InvalidParameter, "num_permutations must be >= 1");
  }
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Scalar> averages(static_cast<std::size_t>(n / 2));
  double total = 0.0;
  for (std::int64_t t = 0; t < num_permutations; ++t) {
    auto prng = rng::make_stream(seed, {rng::kTagPermutation, static_cast<std::uint64_t>(t)});
    for (std::int64_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::int64_t> dist(0, i);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(dist(prng))]);
    }
    for (std::int64_t i = 0; i < n / 2; ++i) {
      const Scalar a = x.values[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(2 * i)])];
      const Scalar b =
          x.values[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(2 * i + 1)])];
      averages[static_cast<std::size_t>(i)] = (a + b) / Scalar(2);
    }
    total += static_cast<double>(detail::median_inplace(averages, MedianConvention::Midpoint));
  }
  return static_cast<Scalar>(total / static_cast<double>(num_permutations));
}

}  // namespace hlmt
