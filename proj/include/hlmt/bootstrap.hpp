#pragma once

// Weighted bootstrap with 2*Bernoulli(0.5) weights. A weight vector with
// entries in {0, 2} selects the subsample S = {i : w_i != 0}; the bootstrap
// replicate is the HL estimate recomputed on that subsample. Deviations
// |estimate* - estimate| calibrate confidence intervals and p-values.
//
// Replicate b draws its weights from a stream keyed by (seed, purpose, b),
// so distributions are reproducible for any worker count. Degenerate draws
// (subsample below min_subsample) are redrawn from the same stream, keeping
// the replicate count fixed at B.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hlmt/estimators.hpp"
#include "hlmt/parallel.hpp"
#include "hlmt/rng.hpp"
#include "hlmt/types.hpp"

namespace hlmt {

struct BootstrapConfig {
  std::int64_t replicates = 300;  // B
  std::uint64_t seed = 0;
  std::int64_t min_subsample = 2;
  std::int64_t max_redraws = 100;
};

struct WeightDraw {
  std::vector<std::uint8_t> weights;  // entries are exactly 0 or 2

  std::int64_t subset_size() const {
    std::int64_t c = 0;
    for (auto w : weights) c += (w != 0);
    return c;
  }

  std::vector<std::int64_t> subset() const {
    std::vector<std::int64_t> s;
    s.reserve(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] != 0) s.push_back(static_cast<std::int64_t>(i));
    }
    return s;
  }
};

template <typename Scalar>
struct BootstrapDistribution {
  Scalar center;                   // full-sample HL estimate
  std::vector<Scalar> deviations;  // |estimate* - center|, sorted ascending, size B
  std::uint64_t seed;
  std::int64_t replicates;
};

template <typename Scalar>
struct ConfidenceInterval {
  Scalar center;
  Scalar lower;
  Scalar upper;
  double level;  // 1 - alpha
};

enum class PValueMode { Smoothed, Raw };

namespace detail {

// One 64-bit engine word yields 64 Bernoulli bits, low bit first. The order is
// part of the reproducibility contract shared by gen_weight_draw and the
// distribution engines below.
class BernoulliBits {
 public:
  explicit BernoulliBits(rng::Stream& prng) : prng_(prng) {}

  bool next() {
    if (avail_ == 0) {
      word_ = prng_();
      avail_ = 64;
    }
    const bool bit = (word_ & 1u) != 0;
    word_ >>= 1;
    --avail_;
    return bit;
  }

 private:
  rng::Stream& prng_;
  std::uint64_t word_ = 0;
  int avail_ = 0;
};

inline void validate_bootstrap_config(const BootstrapConfig& cfg, bool one_sample) {
  if (cfg.replicates < 1) throw Error(ErrorCode::InvalidParameter, "replicates must be >= 1");
  if (cfg.max_redraws < 1) throw Error(ErrorCode::InvalidParameter, "max_redraws must be >= 1");
  const std::int64_t min_required = one_sample ? 2 : 1;
  if (cfg.min_subsample < min_required) {
    throw Error(ErrorCode::InvalidParameter, one_sample
                                                 ? "min_subsample must be >= 2 for one-sample use"
                                                 : "min_subsample must be >= 1 per side");
  }
}

template <typename Scalar>
struct SortedSample {
  std::vector<Scalar> values;      // sorted (ascending, or descending for y)
  std::vector<std::int32_t> perm;  // original index of each sorted position

  static SortedSample make(const VectorX<Scalar>& v, bool descending) {
    const auto n = static_cast<std::int64_t>(v.size());
    SortedSample s;
    s.perm.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) s.perm[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);
    if (descending) {
      std::sort(s.perm.begin(), s.perm.end(),
                [&](std::int32_t a, std::int32_t b) { return v[a] > v[b]; });
    } else {
      std::sort(s.perm.begin(), s.perm.end(),
                [&](std::int32_t a, std::int32_t b) { return v[a] < v[b]; });
    }
    s.values.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      s.values[static_cast<std::size_t>(i)] = v[s.perm[static_cast<std::size_t>(i)]];
    }
    return s;
  }
};

// Draws weight bits for indices [0, n) and gathers the flagged subsample in
// sorted order. Returns the subsample size.
template <typename Scalar>
std::int64_t gather_subsample(const SortedSample<Scalar>& s, const std::vector<std::uint8_t>& bits,
                              std::int64_t offset, std::vector<Scalar>& out) {
  out.clear();
  for (std::size_t t = 0; t < s.values.size(); ++t) {
    if (bits[static_cast<std::size_t>(offset) + static_cast<std::size_t>(s.perm[t])] != 0) {
      out.push_back(s.values[t]);
    }
  }
  return static_cast<std::int64_t>(out.size());
}

inline void draw_weight_bits(std::int64_t count, rng::Stream& prng,
                             std::vector<std::uint8_t>& bits) {
  bits.resize(static_cast<std::size_t>(count));
  BernoulliBits gen(prng);
  for (std::int64_t i = 0; i < count; ++i) {
    bits[static_cast<std::size_t>(i)] = gen.next() ? 2 : 0;
  }
}

// One-sample deviations; stream path is (tag, salt, replicate).
template <typename Scalar>
std::vector<Scalar> bootstrap_deviations_one(const SortedSample<Scalar>& sx, Scalar center,
                                             const BootstrapConfig& cfg, MedianConvention conv,
                                             std::uint64_t tag, std::uint64_t salt) {
  const auto n = static_cast<std::int64_t>(sx.values.size());
  std::vector<Scalar> devs(static_cast<std::size_t>(cfg.replicates));
  parallel::parallel_for(cfg.replicates, [&](std::int64_t b) {
    auto prng = rng::make_stream(cfg.seed, {tag, salt, static_cast<std::uint64_t>(b)});
    std::vector<std::uint8_t> bits;
    std::vector<Scalar> sub;
    sub.reserve(static_cast<std::size_t>(n));
    std::int64_t attempts = 0;
    for (;;) {
      draw_weight_bits(n, prng, bits);
      if (gather_subsample(sx, bits, 0, sub) >= cfg.min_subsample) break;
      if (++attempts > cfg.max_redraws) {
        throw Error(ErrorCode::TooManyRedraws, "bootstrap subsample stayed degenerate");
      }
    }
    const Scalar est = hl_from_sorted(sub.data(), static_cast<std::int64_t>(sub.size()), conv);
    devs[static_cast<std::size_t>(b)] = std::abs(est - center);
  });
  std::sort(devs.begin(), devs.end());
  return devs;
}

// Two-sample deviations: one stream per replicate draws n + m weights, the
// first n for x and the next m for y.
template <typename Scalar>
std::vector<Scalar> bootstrap_deviations_two(const SortedSample<Scalar>& sx,
                                             const SortedSample<Scalar>& sy_desc, Scalar center,
                                             const BootstrapConfig& cfg, MedianConvention conv,
                                             std::uint64_t tag, std::uint64_t salt) {
  const auto n = static_cast<std::int64_t>(sx.values.size());
  const auto m = static_cast<std::int64_t>(sy_desc.values.size());
  std::vector<Scalar> devs(static_cast<std::size_t>(cfg.replicates));
  parallel::parallel_for(cfg.replicates, [&](std::int64_t b) {
    auto prng = rng::make_stream(cfg.seed, {tag, salt, static_cast<std::uint64_t>(b)});
    std::vector<std::uint8_t> bits;
    std::vector<Scalar> subx, suby;
    subx.reserve(static_cast<std::size_t>(n));
    suby.reserve(static_cast<std::size_t>(m));
    std::int64_t attempts = 0;
    for (;;) {
      draw_weight_bits(n + m, prng, bits);
      const std::int64_t cx = gather_subsample(sx, bits, 0, subx);
      const std::int64_t cy = gather_subsample(sy_desc, bits, n, suby);
      if (cx >= cfg.min_subsample && cy >= cfg.min_subsample) break;
      if (++attempts > cfg.max_redraws) {
        throw Error(ErrorCode::TooManyRedraws, "bootstrap subsample stayed degenerate");
      }
    }
    const Scalar est =
        hl_diff_from_sorted(subx.data(), static_cast<std::int64_t>(subx.size()), suby.data(),
                            static_cast<std::int64_t>(suby.size()), conv);
    devs[static_cast<std::size_t>(b)] = std::abs(est - center);
  });
  std::sort(devs.begin(), devs.end());
  return devs;
}

// Smallest 1-based rank k with empirical CDF k/B >= level. Comparing k/B
// against level directly avoids ceil() rounding artifacts.
inline std::int64_t inf_quantile_rank(std::int64_t b, double level) {
  std::int64_t k = static_cast<std::int64_t>(std::floor(level * static_cast<double>(b)));
  if (k < 1) k = 1;
  if (k > b) k = b;
  while (k > 1 &&
         static_cast<double>(k - 1) / static_cast<double>(b) >= level) {
    --k;
  }
  while (k < b && static_cast<double>(k) / static_cast<double>(b) < level) {
    ++k;
  }
  return k;
}

}  // namespace detail

// i.i.d. entries in {0, 2}, each 2 with probability 1/2.
inline WeightDraw gen_weight_draw(std::int64_t n, rng::Stream& prng) {
  if (n < 1) throw Error(ErrorCode::InvalidParameter, "weight draw needs n >= 1");
  WeightDraw d;
  detail::draw_weight_bits(n, prng, d.weights);
  return d;
}

// HL estimate of the subsample selected by a weight draw.
template <typename Scalar>
Scalar bootstrap_replicate_one(const UnivariateSample<Scalar>& x, const WeightDraw& draw,
                               MedianConvention conv = MedianConvention::Midpoint) {
  if (static_cast<std::int64_t>(draw.weights.size()) != x.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weight vector length must match sample size");
  }
  std::vector<Scalar> sub;
  sub.reserve(draw.weights.size());
  for (std::size_t i = 0; i < draw.weights.size(); ++i) {
    if (draw.weights[i] != 0) sub.push_back(x.values[static_cast<Eigen::Index>(i)]);
  }
  if (sub.size() < 2) {
    throw Error(ErrorCode::DegenerateSubsample, "subsample has fewer than 2 points");
  }
  std::sort(sub.begin(), sub.end());
  return detail::hl_from_sorted(sub.data(), static_cast<std::int64_t>(sub.size()), conv);
}

template <typename Scalar>
Scalar bootstrap_replicate_two(const PairedSamples<Scalar>& s, const WeightDraw& draw_x,
                               const WeightDraw& draw_y,
                               MedianConvention conv = MedianConvention::Midpoint) {
  if (static_cast<std::int64_t>(draw_x.weights.size()) != s.x.size() ||
      static_cast<std::int64_t>(draw_y.weights.size()) != s.y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weight vector lengths must match sample sizes");
  }
  std::vector<Scalar> subx, suby;
  for (std::size_t i = 0; i < draw_x.weights.size(); ++i) {
    if (draw_x.weights[i] != 0) subx.push_back(s.x.values[static_cast<Eigen::Index>(i)]);
  }
  for (std::size_t j = 0; j < draw_y.weights.size(); ++j) {
    if (draw_y.weights[j] != 0) suby.push_back(s.y.values[static_cast<Eigen::Index>(j)]);
  }
  if (subx.empty() || suby.empty()) {
    throw Error(ErrorCode::DegenerateSubsample, "one side of the subsample is empty");
  }
  std::sort(subx.begin(), subx.end());
  std::sort(suby.begin(), suby.end(), std::greater<Scalar>());
  return detail::hl_diff_from_sorted(subx.data(), static_cast<std::int64_t>(subx.size()),
                                     suby.data(), static_cast<std::int64_t>(suby.size()), conv);
}

template <typename Scalar>
BootstrapDistribution<Scalar> bootstrap_distribution(
    const UnivariateSample<Scalar>& x, const BootstrapConfig& cfg,
    MedianConvention conv = MedianConvention::Midpoint) {
  detail::validate_bootstrap_config(cfg, /*one_sample=*/true);
  if (x.size() < 2) throw Error(ErrorCode::SampleTooSmall, "bootstrap needs n >= 2");
  const auto sx = detail::SortedSample<Scalar>::make(x.values, false);
  const Scalar center =
      detail::hl_from_sorted(sx.values.data(), static_cast<std::int64_t>(sx.values.size()), conv);
  auto devs = detail::bootstrap_deviations_one(sx, center, cfg, conv, rng::kTagBootOne, 0);
  return {center, std::move(devs), cfg.seed, cfg.replicates};
}

template <typename Scalar>
BootstrapDistribution<Scalar> bootstrap_distribution(
    const PairedSamples<Scalar>& s, const BootstrapConfig& cfg,
    MedianConvention conv = MedianConvention::Midpoint) {
  detail::validate_bootstrap_config(cfg, /*one_sample=*/false);
  if (s.x.size() < 2 || s.y.size() < 2) {
    throw Error(ErrorCode::SampleTooSmall, "two-sample bootstrap needs n, m >= 2");
  }
  const auto sx = detail::SortedSample<Scalar>::make(s.x.values, false);
  const auto sy = detail::SortedSample<Scalar>::make(s.y.values, true);
  const Scalar center = detail::hl_diff_from_sorted(
      sx.values.data(), static_cast<std::int64_t>(sx.values.size()), sy.values.data(),
      static_cast<std::int64_t>(sy.values.size()), conv);
  auto devs = detail::bootstrap_deviations_two(sx, sy, center, cfg, conv, rng::kTagBootTwo, 0);
  return {center, std::move(devs), cfg.seed, cfg.replicates};
}

// Exact empirical inf-quantile of the deviations, level in (0, 1].
template <typename Scalar>
Scalar bootstrap_quantile(const BootstrapDistribution<Scalar>& dist, double level) {
  if (dist.deviations.empty()) {
    throw Error(ErrorCode::EmptyDistribution, "no bootstrap deviations");
  }
  if (!(level > 0.0 && level <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "quantile level must lie in (0, 1]");
  }
  const auto b = static_cast<std::int64_t>(dist.deviations.size());
  return dist.deviations[static_cast<std::size_t>(detail::inf_quantile_rank(b, level) - 1)];
}

template <typename Scalar, typename Data>
ConfidenceInterval<Scalar> confidence_interval(const Data& data, const BootstrapConfig& cfg,
                                               double alpha,
                                               MedianConvention conv = MedianConvention::Midpoint) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0, 1)");
  }
  const auto dist = bootstrap_distribution(data, cfg, conv);
  const Scalar q = bootstrap_quantile(dist, 1.0 - alpha);
  return {dist.center, dist.center - q, dist.center + q, 1.0 - alpha};
}

// P(|estimate* - estimate| exceeds |estimate|), estimated from the replicates.
// Raw counts strict exceedances over B; Smoothed counts ties as exceedances
// and adds one phantom exceedance over B + 1, so it never returns zero.
template <typename Scalar>
double bootstrap_pvalue(const BootstrapDistribution<Scalar>& dist,
                        PValueMode mode = PValueMode::Smoothed) {
  if (dist.deviations.empty()) {
    throw Error(ErrorCode::EmptyDistribution, "no bootstrap deviations");
  }
  const Scalar c = std::abs(dist.center);
  const auto b = static_cast<double>(dist.deviations.size());
  if (mode == PValueMode::Raw) {
    const auto above = dist.deviations.end() -
                       std::upper_bound(dist.deviations.begin(), dist.deviations.end(), c);
    return static_cast<double>(above) / b;
  }
  const auto at_or_above = dist.deviations.end() -
                           std::lower_bound(dist.deviations.begin(), dist.deviations.end(), c);
  return (1.0 + static_cast<double>(at_or_above)) / (b + 1.0);
}

}  // namespace hlmt
