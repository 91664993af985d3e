#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "hlmt/errors.hpp"

namespace hlmt {

template <typename Scalar>
using VectorX = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// How the median of an even number of values is resolved.
//   Midpoint: average of the two middle order statistics (classical estimator).
//   LowerInf: the ceil(K/2)-th order statistic, i.e. the smallest t whose
//             empirical CDF reaches 1/2.
enum class MedianConvention { Midpoint, LowerInf };

inline const char* median_convention_name(MedianConvention c) {
  return c == MedianConvention::Midpoint ? "midpoint" : "lowerinf";
}

namespace detail {

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& v, const char* what) {
  if (!v.derived().array().isFinite().all()) {
    throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains NaN or infinity");
  }
}

}  // namespace detail

// One-sample observation vector. Finiteness is checked once at construction;
// size requirements are per operation (HL needs n >= 2, the plain median n >= 1).
template <typename Scalar>
struct UnivariateSample {
  VectorX<Scalar> values;

  explicit UnivariateSample(VectorX<Scalar> v) : values(std::move(v)) {
    if (values.size() < 1) {
      throw Error(ErrorCode::SampleTooSmall, "sample must contain at least one value");
    }
    detail::require_finite(values, "sample");
  }

  Eigen::Index size() const { return values.size(); }
};

template <typename Scalar>
struct PairedSamples {
  UnivariateSample<Scalar> x;
  UnivariateSample<Scalar> y;

  PairedSamples(UnivariateSample<Scalar> x_in, UnivariateSample<Scalar> y_in)
      : x(std::move(x_in)), y(std::move(y_in)) {}
};

template <typename Scalar>
struct HLEstimate {
  Scalar value;
  std::int64_t pair_count;
  MedianConvention convention;
};

// n x p observations, optionally with a second m x p group for two-sample work.
template <typename Scalar>
struct MultivariateDataset {
  MatrixX<Scalar> x;
  std::optional<MatrixX<Scalar>> y;

  explicit MultivariateDataset(MatrixX<Scalar> x_in, std::optional<MatrixX<Scalar>> y_in = {})
      : x(std::move(x_in)), y(std::move(y_in)) {
    if (x.rows() < 2 || x.cols() < 1) {
      throw Error(ErrorCode::SampleTooSmall, "dataset needs n >= 2 rows and p >= 1 columns");
    }
    detail::require_finite(x, "dataset");
    if (y) {
      if (y->cols() != x.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "x and y must have the same number of columns");
      }
      if (y->rows() < 2) {
        throw Error(ErrorCode::SampleTooSmall, "second sample needs m >= 2 rows");
      }
      detail::require_finite(*y, "dataset");
    }
  }

  bool two_sample() const { return y.has_value(); }
};

}  // namespace hlmt
