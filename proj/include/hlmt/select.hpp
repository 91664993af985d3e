#pragma once

// Selection of order statistics over implicit pair sets, without materializing
// the pairs: the k-th smallest Walsh average (x_i + x_j)/2 over i < j, and the
// k-th smallest difference x_i - y_j. Expected O(n log n) via randomized
// value pivoting (median of three active pair values, drawn by index sampling)
// with tie-aware two-pointer counting on the sorted inputs. Results agree
// bit-exactly with full enumeration because every comparison is carried out on
// the realized pair values themselves.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "hlmt/errors.hpp"
#include "hlmt/rng.hpp"

namespace hlmt::detail {

// Below this many active candidates the remaining pairs are materialized and
// finished with nth_element. Kept small so that the pivot machinery is
// exercised already at modest n (the brute-force oracle tests run at n <= 50).
inline constexpr std::int64_t kSelectMaterializeCutoff = 96;

inline std::int64_t rand_below(rng::Stream& s, std::int64_t bound) {
  return static_cast<std::int64_t>(
      (static_cast<unsigned __int128>(s()) * static_cast<unsigned __int128>(bound)) >> 64);
}

template <typename Scalar>
Scalar median_of_three(Scalar a, Scalar b, Scalar c) {
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

// ---------------------------------------------------------------------------
// Walsh averages (x_i + x_j)/2, i < j, over x sorted ascending.
//
// Comparisons use sums against 2*pivot: halving a sum and doubling a realized
// average are both exact in floating point, so pair ordering is identical to
// ordering of the realized (x_i + x_j)/2 values.
// ---------------------------------------------------------------------------

// Smallest pair value strictly above `v`, scanning every row of the implicit
// matrix (the successor may live outside the active windows, so this cannot
// be restricted to them). Returns +inf when `v` is the maximum pair value.
template <typename Scalar>
Scalar walsh_value_above(const Scalar* x, std::int64_t n, Scalar v) {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  const Scalar bound = Scalar(2) * v;
  std::int64_t j = n;  // first index with x[i] + x[j] > bound, nonincreasing in i
  for (std::int64_t i = 0; i + 1 < n; ++i) {
    while (j > 0 && x[i] + x[j - 1] > bound) --j;
    const std::int64_t first = std::max(j, i + 1);
    if (first < n) best = std::min(best, (x[i] + x[first]) / Scalar(2));
  }
  return best;
}

template <typename Scalar>
class WalshSelector {
 public:
  WalshSelector(const Scalar* x, std::int64_t n) : x_(x), n_(n), rows_(n > 0 ? n - 1 : 0) {
    lb_.resize(static_cast<std::size_t>(rows_));
    ub_.resize(static_cast<std::size_t>(rows_));
    prefix_.resize(static_cast<std::size_t>(rows_) + 1);
    prefix_[0] = 0;
    for (std::int64_t i = 0; i < rows_; ++i) {
      lb_[static_cast<std::size_t>(i)] = i + 1;
      ub_[static_cast<std::size_t>(i)] = n;
      prefix_[static_cast<std::size_t>(i) + 1] = prefix_[static_cast<std::size_t>(i)] + (n - i - 1);
    }
    active_ = prefix_[static_cast<std::size_t>(rows_)];
  }

  // k is 1-based. If next != nullptr it receives the (k+1)-th value, which the
  // caller must guarantee to exist (k + 1 <= pair count).
  Scalar kth(std::int64_t k, Scalar* next) {
    rng::Stream prng(rng::derive(0x57414C5348u, {static_cast<std::uint64_t>(n_),
                                                 static_cast<std::uint64_t>(k)}));
    for (;;) {
      if (active_ <= kSelectMaterializeCutoff) return finish(k, next);
      const Scalar pivot = median_of_three(sample(prng), sample(prng), sample(prng));
      const Scalar bound = Scalar(2) * pivot;
      const auto [le, lt] = count(bound);
      if (lt < k && k <= le) {
        if (next) *next = (le >= k + 1) ? pivot : walsh_value_above(x_, n_, pivot);
        return pivot;
      }
      if (le < k) {
        shrink_left(bound);
        dropped_left_ = le;
      } else {
        shrink_right(bound);
      }
    }
  }

 private:
  Scalar value(std::int64_t i, std::int64_t j) const { return (x_[i] + x_[j]) / Scalar(2); }

  // Uniform draw over the active pairs via the row prefix sums.
  Scalar sample(rng::Stream& prng) const {
    const std::int64_t t = rand_below(prng, active_);
    const auto it = std::upper_bound(prefix_.begin(), prefix_.end(), t);
    const auto i = static_cast<std::int64_t>(it - prefix_.begin()) - 1;
    const std::int64_t j = lb_[static_cast<std::size_t>(i)] + (t - prefix_[static_cast<std::size_t>(i)]);
    return value(i, j);
  }

  struct Counts {
    std::int64_t le, lt;
  };

  // Full-matrix counts of pairs with sum <= bound and sum < bound; one pass,
  // both walking pointers are nonincreasing in i.
  Counts count(Scalar bound) const {
    std::int64_t le = 0, lt = 0;
    std::int64_t jle = n_, jlt = n_;
    for (std::int64_t i = 0; i < rows_; ++i) {
      while (jle > 0 && x_[i] + x_[jle - 1] > bound) --jle;
      while (jlt > 0 && x_[i] + x_[jlt - 1] >= bound) --jlt;
      le += std::max<std::int64_t>(0, jle - (i + 1));
      lt += std::max<std::int64_t>(0, jlt - (i + 1));
    }
    return {le, lt};
  }

  // Drop every pair with sum <= bound; refresh prefix sums and active count.
  void shrink_left(Scalar bound) {
    std::int64_t j = n_;
    for (std::int64_t i = 0; i < rows_; ++i) {
      while (j > 0 && x_[i] + x_[j - 1] > bound) --j;
      const auto s = static_cast<std::size_t>(i);
      lb_[s] = std::min(std::max({lb_[s], j, i + 1}), ub_[s]);
      prefix_[s + 1] = prefix_[s] + (ub_[s] - lb_[s]);
    }
    active_ = prefix_[static_cast<std::size_t>(rows_)];
  }

  // Drop every pair with sum >= bound.
  void shrink_right(Scalar bound) {
    std::int64_t j = n_;
    for (std::int64_t i = 0; i < rows_; ++i) {
      while (j > 0 && x_[i] + x_[j - 1] >= bound) --j;
      const auto s = static_cast<std::size_t>(i);
      ub_[s] = std::max(std::min(ub_[s], std::max(j, i + 1)), lb_[s]);
      prefix_[s + 1] = prefix_[s] + (ub_[s] - lb_[s]);
    }
    active_ = prefix_[static_cast<std::size_t>(rows_)];
  }

  Scalar finish(std::int64_t k, Scalar* next) {
    std::vector<Scalar> vals;
    vals.reserve(static_cast<std::size_t>(active_));
    for (std::int64_t i = 0; i < rows_; ++i) {
      const auto s = static_cast<std::size_t>(i);
      for (std::int64_t j = lb_[s]; j < ub_[s]; ++j) vals.push_back(value(i, j));
    }
    const std::int64_t kk = k - dropped_left_;  // 1-based within vals
    auto mid = vals.begin() + (kk - 1);
    std::nth_element(vals.begin(), mid, vals.end());
    const Scalar v = *mid;
    if (next) {
      if (kk < static_cast<std::int64_t>(vals.size())) {
        *next = *std::min_element(mid + 1, vals.end());
      } else {
        *next = walsh_value_above(x_, n_, v);
      }
    }
    return v;
  }

  const Scalar* x_;
  std::int64_t n_, rows_;
  std::vector<std::int64_t> lb_, ub_;  // active columns of row i: [lb[i], ub[i])
  std::vector<std::int64_t> prefix_;   // prefix_[i] = active pairs in rows < i
  std::int64_t active_ = 0;
  std::int64_t dropped_left_ = 0;  // pairs discarded below the active windows
};

// k-th smallest Walsh average of a sorted vector; `next` as in WalshSelector.
template <typename Scalar>
Scalar kth_walsh_sorted(const Scalar* x, std::int64_t n, std::int64_t k, Scalar* next = nullptr) {
  const std::int64_t pairs = n * (n - 1) / 2;
  if (k < 1 || k > pairs || (next && k + 1 > pairs)) {
    throw Error(ErrorCode::RankOutOfRange, "walsh rank out of range");
  }
  WalshSelector<Scalar> sel(x, n);
  return sel.kth(k, next);
}

// Count of Walsh averages with value <= bound/2 (i.e. sums <= bound).
template <typename Scalar>
std::int64_t count_walsh_le(const Scalar* x, std::int64_t n, Scalar sum_bound) {
  std::int64_t cnt = 0;
  std::int64_t j = n;
  for (std::int64_t i = 0; i + 1 < n; ++i) {
    while (j > 0 && x[i] + x[j - 1] > sum_bound) --j;
    cnt += std::max<std::int64_t>(0, j - (i + 1));
  }
  return cnt;
}

// ---------------------------------------------------------------------------
// Pairwise differences x_i - y_j with x ascending and y sorted DESCENDING, so
// that the implicit matrix is ascending along both rows and columns.
// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar diff_value_above(const Scalar* x, std::int64_t n, const Scalar* ydesc, std::int64_t m,
                        Scalar v) {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  std::int64_t c = m;
  for (std::int64_t i = 0; i < n; ++i) {
    while (c > 0 && x[i] - ydesc[c - 1] > v) --c;
    if (c < m) best = std::min(best, x[i] - ydesc[c]);
  }
  return best;
}

template <typename Scalar>
class DiffSelector {
 public:
  DiffSelector(const Scalar* x, std::int64_t n, const Scalar* ydesc, std::int64_t m)
      : x_(x), y_(ydesc), n_(n), m_(m) {
    lb_.assign(static_cast<std::size_t>(n), 0);
    ub_.assign(static_cast<std::size_t>(n), m);
    prefix_.resize(static_cast<std::size_t>(n) + 1);
    prefix_[0] = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      prefix_[static_cast<std::size_t>(i) + 1] = prefix_[static_cast<std::size_t>(i)] + m;
    }
    active_ = n * m;
  }

  Scalar kth(std::int64_t k, Scalar* next) {
    rng::Stream prng(rng::derive(0x44494646u, {static_cast<std::uint64_t>(n_),
                                               static_cast<std::uint64_t>(m_),
                                               static_cast<std::uint64_t>(k)}));
    for (;;) {
      if (active_ <= kSelectMaterializeCutoff) return finish(k, next);
      const Scalar pivot = median_of_three(sample(prng), sample(prng), sample(prng));
      const auto [le, lt] = count(pivot);
      if (lt < k && k <= le) {
        if (next) *next = (le >= k + 1) ? pivot : diff_value_above(x_, n_, y_, m_, pivot);
        return pivot;
      }
      if (le < k) {
        shrink_left(pivot);
        dropped_left_ = le;
      } else {
        shrink_right(pivot);
      }
    }
  }

 private:
  Scalar value(std::int64_t i, std::int64_t j) const { return x_[i] - y_[j]; }

  Scalar sample(rng::Stream& prng) const {
    const std::int64_t t = rand_below(prng, active_);
    const auto it = std::upper_bound(prefix_.begin(), prefix_.end(), t);
    const auto i = static_cast<std::int64_t>(it - prefix_.begin()) - 1;
    const std::int64_t j = lb_[static_cast<std::size_t>(i)] + (t - prefix_[static_cast<std::size_t>(i)]);
    return value(i, j);
  }

  struct Counts {
    std::int64_t le, lt;
  };

  Counts count(Scalar v) const {
    std::int64_t le = 0, lt = 0;
    std::int64_t cle = m_, clt = m_;  // first column with value > v (resp. >= v)
    for (std::int64_t i = 0; i < n_; ++i) {
      while (cle > 0 && x_[i] - y_[cle - 1] > v) --cle;
      while (clt > 0 && x_[i] - y_[clt - 1] >= v) --clt;
      le += cle;
      lt += clt;
    }
    return {le, lt};
  }

  void shrink_left(Scalar v) {
    std::int64_t c = m_;
    for (std::int64_t i = 0; i < n_; ++i) {
      while (c > 0 && x_[i] - y_[c - 1] > v) --c;
      const auto s = static_cast<std::size_t>(i);
      lb_[s] = std::min(std::max(lb_[s], c), ub_[s]);
      prefix_[s + 1] = prefix_[s] + (ub_[s] - lb_[s]);
    }
    active_ = prefix_[static_cast<std::size_t>(n_)];
  }

  void shrink_right(Scalar v) {
    std::int64_t c = m_;
    for (std::int64_t i = 0; i < n_; ++i) {
      while (c > 0 && x_[i] - y_[c - 1] >= v) --c;
      const auto s = static_cast<std::size_t>(i);
      ub_[s] = std::max(std::min(ub_[s], c), lb_[s]);
      prefix_[s + 1] = prefix_[s] + (ub_[s] - lb_[s]);
    }
    active_ = prefix_[static_cast<std::size_t>(n_)];
  }

  Scalar finish(std::int64_t k, Scalar* next) {
    std::vector<Scalar> vals;
    vals.reserve(static_cast<std::size_t>(active_));
    for (std::int64_t i = 0; i < n_; ++i) {
      const auto s = static_cast<std::size_t>(i);
      for (std::int64_t j = lb_[s]; j < ub_[s]; ++j) vals.push_back(value(i, j));
    }
    const std::int64_t kk = k - dropped_left_;
    auto mid = vals.begin() + (kk - 1);
    std::nth_element(vals.begin(), mid, vals.end());
    const Scalar v = *mid;
    if (next) {
      if (kk < static_cast<std::int64_t>(vals.size())) {
        *next = *std::min_element(mid + 1, vals.end());
      } else {
        *next = diff_value_above(x_, n_, y_, m_, v);
      }
    }
    return v;
  }

  const Scalar* x_;
  const Scalar* y_;
  std::int64_t n_, m_;
  std::vector<std::int64_t> lb_, ub_;
  std::vector<std::int64_t> prefix_;
  std::int64_t active_ = 0;
  std::int64_t dropped_left_ = 0;
};

template <typename Scalar>
Scalar kth_diff_sorted(const Scalar* x, std::int64_t n, const Scalar* ydesc, std::int64_t m,
                       std::int64_t k, Scalar* next = nullptr) {
  const std::int64_t pairs = n * m;
  if (k < 1 || k > pairs || (next && k + 1 > pairs)) {
    throw Error(ErrorCode::RankOutOfRange, "difference rank out of range");
  }
  DiffSelector<Scalar> sel(x, n, ydesc, m);
  return sel.kth(k, next);
}

}  // namespace hlmt::detail
