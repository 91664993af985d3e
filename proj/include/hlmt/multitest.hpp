#pragma once

// High-dimensional inference on column-wise HL estimates.
//
// Global null tests share ONE weight draw across all coordinates within a
// bootstrap replicate, preserving cross-coordinate dependence of the max
// statistic. Per-coordinate p-values use INDEPENDENT weight draws per
// coordinate (streams keyed by column index). Keeping these two weight
// constructions distinct is the load-bearing subtlety of this module.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hlmt/bootstrap.hpp"
#include "hlmt/estimators.hpp"
#include "hlmt/parallel.hpp"
#include "hlmt/rng.hpp"
#include "hlmt/types.hpp"

namespace hlmt {

template <typename Scalar>
struct GlobalTestResult {
  VectorX<Scalar> estimates;  // per-coordinate location estimates (or scaled means)
  Scalar max_stat;
  Scalar critical_value;
  bool reject;
  double alpha;
  std::int64_t replicates;
};

struct MultiTestResult {
  Eigen::VectorXd pvalues;
  double t_bh;                         // 0 when nothing qualifies
  std::vector<Eigen::Index> rejected;  // 0-based coordinates, ascending
  double alpha;
};

struct FDPReport {
  std::int64_t false_rejections;  // V
  std::int64_t total_rejections;  // R
  double fdp;                     // V / max(R, 1)
  double tpp;                     // |rejected ∩ H1| / |H1|, vacuously 1 when H1 empty
  bool h1_empty;
};

namespace detail {

template <typename Scalar>
struct GlobalCore {
  VectorX<Scalar> estimates;
  std::vector<Scalar> max_deviations;  // sorted ascending, one per replicate
};

template <typename Scalar>
std::vector<SortedSample<Scalar>> sorted_columns(const MatrixX<Scalar>& x) {
  std::vector<SortedSample<Scalar>> cols(static_cast<std::size_t>(x.cols()));
  parallel::parallel_for(x.cols(), [&](std::int64_t l) {
    cols[static_cast<std::size_t>(l)] = SortedSample<Scalar>::make(x.col(l), false);
  });
  return cols;
}

template <typename Scalar>
void require_matrix(const MatrixX<Scalar>& x, std::int64_t min_rows, const char* what) {
  if (x.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "p must be >= 1");
  if (x.rows() < min_rows) {
    throw Error(ErrorCode::SampleTooSmall, std::string(what) + " needs more observations");
  }
  require_finite(x, what);
}

inline std::int64_t count_nonzero(const std::vector<std::uint8_t>& bits, std::int64_t begin,
                                  std::int64_t end) {
  std::int64_t c = 0;
  for (std::int64_t i = begin; i < end; ++i) c += (bits[static_cast<std::size_t>(i)] != 0);
  return c;
}

// One-sample global core: column estimates plus the bootstrap distribution of
// max_l |estimate*_l - estimate_l| under replicate-shared weight draws.
template <typename Scalar>
GlobalCore<Scalar> global_core_one(const MatrixX<Scalar>& x, const BootstrapConfig& cfg,
                                   MedianConvention conv) {
  require_matrix(x, 4, "one-sample global test");
  validate_bootstrap_config(cfg, /*one_sample=*/true);
  const std::int64_t n = x.rows(), p = x.cols();
  const auto cols = sorted_columns(x);

  GlobalCore<Scalar> core;
  core.estimates.resize(p);
  parallel::parallel_for(p, [&](std::int64_t l) {
    core.estimates[l] = hl_from_sorted(cols[static_cast<std::size_t>(l)].values.data(), n, conv);
  });

  core.max_deviations.resize(static_cast<std::size_t>(cfg.replicates));
  parallel::parallel_for(cfg.replicates, [&](std::int64_t b) {
    auto prng = rng::make_stream(cfg.seed, {rng::kTagGlobal, static_cast<std::uint64_t>(b)});
    std::vector<std::uint8_t> bits;
    std::int64_t attempts = 0;
    for (;;) {
      draw_weight_bits(n, prng, bits);
      if (count_nonzero(bits, 0, n) >= cfg.min_subsample) break;
      if (++attempts > cfg.max_redraws) {
        throw Error(ErrorCode::TooManyRedraws, "shared weight draw stayed degenerate");
      }
    }
    std::vector<Scalar> sub;
    sub.reserve(static_cast<std::size_t>(n));
    Scalar maxdev = 0;
    for (std::int64_t l = 0; l < p; ++l) {
      gather_subsample(cols[static_cast<std::size_t>(l)], bits, 0, sub);
      const Scalar est = hl_from_sorted(sub.data(), static_cast<std::int64_t>(sub.size()), conv);
      maxdev = std::max(maxdev, std::abs(est - core.estimates[l]));
    }
    core.max_deviations[static_cast<std::size_t>(b)] = maxdev;
  });
  std::sort(core.max_deviations.begin(), core.max_deviations.end());
  return core;
}

template <typename Scalar>
GlobalCore<Scalar> global_core_two(const MatrixX<Scalar>& x, const MatrixX<Scalar>& y,
                                   const BootstrapConfig& cfg, MedianConvention conv) {
  require_matrix(x, 4, "two-sample global test");
  require_matrix(y, 4, "two-sample global test");
  if (x.cols() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "x and y must have the same number of columns");
  }
  validate_bootstrap_config(cfg, /*one_sample=*/false);
  const std::int64_t n = x.rows(), m = y.rows(), p = x.cols();
  const auto xcols = sorted_columns(x);
  std::vector<SortedSample<Scalar>> ycols(static_cast<std::size_t>(p));
  parallel::parallel_for(p, [&](std::int64_t l) {
    ycols[static_cast<std::size_t>(l)] = SortedSample<Scalar>::make(y.col(l), true);
  });

  GlobalCore<Scalar> core;
  core.estimates.resize(p);
  parallel::parallel_for(p, [&](std::int64_t l) {
    core.estimates[l] =
        hl_diff_from_sorted(xcols[static_cast<std::size_t>(l)].values.data(), n,
                            ycols[static_cast<std::size_t>(l)].values.data(), m, conv);
  });

  core.max_deviations.resize(static_cast<std::size_t>(cfg.replicates));
  parallel::parallel_for(cfg.replicates, [&](std::int64_t b) {
    auto prng = rng::make_stream(cfg.seed, {rng::kTagGlobal, static_cast<std::uint64_t>(b)});
    std::vector<std::uint8_t> bits;
    std::int64_t attempts = 0;
    for (;;) {
      draw_weight_bits(n + m, prng, bits);
      if (count_nonzero(bits, 0, n) >= cfg.min_subsample &&
          count_nonzero(bits, n, n + m) >= cfg.min_subsample) {
        break;
      }
      if (++attempts > cfg.max_redraws) {
        throw Error(ErrorCode::TooManyRedraws, "shared weight draw stayed degenerate");
      }
    }
    std::vector<Scalar> subx, suby;
    subx.reserve(static_cast<std::size_t>(n));
    suby.reserve(static_cast<std::size_t>(m));
    Scalar maxdev = 0;
    for (std::int64_t l = 0; l < p; ++l) {
      gather_subsample(xcols[static_cast<std::size_t>(l)], bits, 0, subx);
      gather_subsample(ycols[static_cast<std::size_t>(l)], bits, n, suby);
      const Scalar est =
          hl_diff_from_sorted(subx.data(), static_cast<std::int64_t>(subx.size()), suby.data(),
                              static_cast<std::int64_t>(suby.size()), conv);
      maxdev = std::max(maxdev, std::abs(est - core.estimates[l]));
    }
    core.max_deviations[static_cast<std::size_t>(b)] = maxdev;
  });
  std::sort(core.max_deviations.begin(), core.max_deviations.end());
  return core;
}

template <typename Scalar>
GlobalTestResult<Scalar> finish_global_test(GlobalCore<Scalar> core, double alpha,
                                            std::int64_t replicates) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0, 1)");
  }
  const Scalar max_stat = core.estimates.cwiseAbs().maxCoeff();
  const auto b = static_cast<std::int64_t>(core.max_deviations.size());
  const Scalar critical =
      core.max_deviations[static_cast<std::size_t>(inf_quantile_rank(b, 1.0 - alpha) - 1)];
  return {std::move(core.estimates), max_stat, critical, max_stat > critical, alpha, replicates};
}

}  // namespace detail

// Reject H0: theta_l = 0 for all l when max_l |estimate_l| exceeds the
// bootstrap (1 - alpha) quantile of the shared-draw max deviation.
template <typename Scalar>
GlobalTestResult<Scalar> global_test_one_sample(const MatrixX<Scalar>& x, double alpha,
                                                const BootstrapConfig& cfg,
                                                MedianConvention conv = MedianConvention::Midpoint) {
  return detail::finish_global_test(detail::global_core_one(x, cfg, conv), alpha, cfg.replicates);
}

template <typename Scalar>
GlobalTestResult<Scalar> global_test_two_sample(const MatrixX<Scalar>& x, const MatrixX<Scalar>& y,
                                                double alpha, const BootstrapConfig& cfg,
                                                MedianConvention conv = MedianConvention::Midpoint) {
  return detail::finish_global_test(detail::global_core_two(x, y, cfg, conv), alpha,
                                    cfg.replicates);
}

// Per-coordinate bootstrap p-values with independent per-coordinate draws.
// Streams are keyed by column position: permuting columns permutes estimates
// exactly, while p-values are only equivariant in distribution.
template <typename Scalar>
Eigen::VectorXd coordinate_pvalues_one(const MatrixX<Scalar>& x, const BootstrapConfig& cfg,
                                       MedianConvention conv = MedianConvention::Midpoint,
                                       PValueMode mode = PValueMode::Smoothed) {
  detail::require_matrix(x, 4, "coordinate p-values");
  detail::validate_bootstrap_config(cfg, /*one_sample=*/true);
  const std::int64_t n = x.rows(), p = x.cols();
  Eigen::VectorXd pvals(p);
  parallel::parallel_for(p, [&](std::int64_t l) {
    const auto sx = detail::SortedSample<Scalar>::make(x.col(l), false);
    const Scalar center = detail::hl_from_sorted(sx.values.data(), n, conv);
    auto devs = detail::bootstrap_deviations_one(sx, center, cfg, conv, rng::kTagCoordinate,
                                                 static_cast<std::uint64_t>(l));
    const BootstrapDistribution<Scalar> dist{center, std::move(devs), cfg.seed, cfg.replicates};
    pvals[l] = bootstrap_pvalue(dist, mode);
  });
  return pvals;
}

template <typename Scalar>
Eigen::VectorXd coordinate_pvalues_two(const MatrixX<Scalar>& x, const MatrixX<Scalar>& y,
                                       const BootstrapConfig& cfg,
                                       MedianConvention conv = MedianConvention::Midpoint,
                                       PValueMode mode = PValueMode::Smoothed) {
  detail::require_matrix(x, 4, "coordinate p-values");
  detail::require_matrix(y, 4, "coordinate p-values");
  if (x.cols() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "x and y must have the same number of columns");
  }
  detail::validate_bootstrap_config(cfg, /*one_sample=*/false);
  const std::int64_t n = x.rows(), m = y.rows(), p = x.cols();
  Eigen::VectorXd pvals(p);
  parallel::parallel_for(p, [&](std::int64_t l) {
    const auto sx = detail::SortedSample<Scalar>::make(x.col(l), false);
    const auto sy = detail::SortedSample<Scalar>::make(y.col(l), true);
    const Scalar center = detail::hl_diff_from_sorted(sx.values.data(), n, sy.values.data(), m, conv);
    auto devs = detail::bootstrap_deviations_two(sx, sy, center, cfg, conv, rng::kTagCoordinate,
                                                 static_cast<std::uint64_t>(l));
    const BootstrapDistribution<Scalar> dist{center, std::move(devs), cfg.seed, cfg.replicates};
    pvals[l] = bootstrap_pvalue(dist, mode);
  });
  return pvals;
}

// Benjamini-Hochberg step-up: t_BH = P_(l_BH) with
// l_BH = max{l : P_(l) <= alpha*l/p}; everything at or below t_BH is rejected.
inline MultiTestResult bh_threshold(const Eigen::VectorXd& pvalues, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0, 1)");
  }
  const auto p = static_cast<std::int64_t>(pvalues.size());
  if (p < 1) throw Error(ErrorCode::InvalidPValue, "empty p-value vector");
  for (std::int64_t l = 0; l < p; ++l) {
    const double v = pvalues[l];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidPValue, "p-values must lie in [0, 1]");
    }
  }
  std::vector<std::int64_t> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return pvalues[a] != pvalues[b] ? pvalues[a] < pvalues[b] : a < b;
  });
  double t_bh = 0.0;
  bool found = false;
  for (std::int64_t l = p; l >= 1; --l) {
    const double sorted_p = pvalues[order[static_cast<std::size_t>(l - 1)]];
    if (sorted_p <= alpha * static_cast<double>(l) / static_cast<double>(p)) {
      t_bh = sorted_p;
      found = true;
      break;
    }
  }
  MultiTestResult result{pvalues, t_bh, {}, alpha};
  if (found) {
    for (Eigen::Index l = 0; l < pvalues.size(); ++l) {
      if (pvalues[l] <= t_bh) result.rejected.push_back(l);
    }
  }
  return result;
}

// V, R, FDP and TPP against a known null set (0-based coordinates).
inline FDPReport fdp_tpp(const MultiTestResult& result, const std::vector<Eigen::Index>& null_set) {
  const auto p = result.pvalues.size();
  std::vector<char> is_null(static_cast<std::size_t>(p), 0);
  for (Eigen::Index l : null_set) {
    if (l < 0 || l >= p) {
      throw Error(ErrorCode::TruthDimensionMismatch, "null index outside [0, p)");
    }
    is_null[static_cast<std::size_t>(l)] = 1;
  }
  std::int64_t null_count = 0;
  for (char c : is_null) null_count += c;
  const std::int64_t h1 = static_cast<std::int64_t>(p) - null_count;

  std::int64_t v = 0, true_rejections = 0;
  for (Eigen::Index l : result.rejected) {
    if (is_null[static_cast<std::size_t>(l)]) {
      ++v;
    } else {
      ++true_rejections;
    }
  }
  const auto r = static_cast<std::int64_t>(result.rejected.size());
  FDPReport report;
  report.false_rejections = v;
  report.total_rejections = r;
  report.fdp = static_cast<double>(v) / static_cast<double>(std::max<std::int64_t>(r, 1));
  report.h1_empty = (h1 == 0);
  report.tpp =
      report.h1_empty ? 1.0 : static_cast<double>(true_rejections) / static_cast<double>(h1);
  return report;
}

// Plug-in estimate p*t / max(R(t), 1) of FDP(t).
inline double fdp_hat(const Eigen::VectorXd& pvalues, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "threshold must lie in [0, 1]");
  }
  std::int64_t r = 0;
  for (Eigen::Index l = 0; l < pvalues.size(); ++l) r += (pvalues[l] <= t);
  return static_cast<double>(pvalues.size()) * t /
         static_cast<double>(std::max<std::int64_t>(r, 1));
}

}  // namespace hlmt
