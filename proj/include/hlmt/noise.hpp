#pragma once

// Noise generators for the simulation harness. Entries are drawn row-major
// from a single stream; row-coupled variants (the Gaussian AR family) draw the
// row's mixture component first, then the row entries. AR(1) rows use the
// stationary recursion z_c = rho*z_{c-1} + sqrt(1-rho^2)*g_c, whose covariance
// is exactly rho^|c-d| — no Cholesky factor needed.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "hlmt/errors.hpp"
#include "hlmt/rng.hpp"
#include "hlmt/types.hpp"

namespace hlmt {

enum class NoiseKind { ScaledT, DiffParetoGaussMix, GaussianARMix, GaussianAR };

template <typename Scalar>
struct NoiseModel {
  NoiseKind kind = NoiseKind::ScaledT;
  Scalar nu = 3;          // ScaledT degrees of freedom; +inf selects the normal law
  Scalar scale = 1;       // ScaledT multiplier / GaussianAR covariance scale
  Scalar shape = 2;       // Pareto shape
  Scalar mix_weight = 0;  // probability of the contaminating component
  Scalar rho = 0;         // AR(1) correlation
  Scalar inflation = 1;   // covariance multiplier of the contaminating Gaussian

  static NoiseModel scaled_t(Scalar nu, Scalar scale) {
    NoiseModel m;
    m.kind = NoiseKind::ScaledT;
    m.nu = nu;
    m.scale = scale;
    return m;
  }

  // diff(mix_weight*Pareto(shape) + (1-mix_weight)*N(0,1)): the difference of
  // two independent draws from the mixture, symmetric about zero per entry.
  static NoiseModel diff_pareto_gauss_mix(Scalar shape, Scalar mix_weight) {
    NoiseModel m;
    m.kind = NoiseKind::DiffParetoGaussMix;
    m.shape = shape;
    m.mix_weight = mix_weight;
    return m;
  }

  // mix_weight*N(0, inflation*Sigma) + (1-mix_weight)*N(0, Sigma), component
  // chosen per row, Sigma_{c,d} = rho^|c-d|.
  static NoiseModel gaussian_ar_mix(Scalar rho, Scalar inflation, Scalar mix_weight) {
    NoiseModel m;
    m.kind = NoiseKind::GaussianARMix;
    m.rho = rho;
    m.inflation = inflation;
    m.mix_weight = mix_weight;
    return m;
  }

  static NoiseModel gaussian_ar(Scalar rho, Scalar scale) {
    NoiseModel m;
    m.kind = NoiseKind::GaussianAR;
    m.rho = rho;
    m.scale = scale;
    return m;
  }

  void validate() const {
    switch (kind) {
      case NoiseKind::ScaledT:
        if (!(nu > 0)) throw Error(ErrorCode::InvalidParameter, "nu must be positive");
        if (!(scale > 0)) throw Error(ErrorCode::InvalidParameter, "scale must be positive");
        break;
      case NoiseKind::DiffParetoGaussMix:
        if (!(shape > 0)) throw Error(ErrorCode::InvalidParameter, "shape must be positive");
        if (!(mix_weight >= 0 && mix_weight <= 1)) {
          throw Error(ErrorCode::InvalidParameter, "mix_weight must lie in [0, 1]");
        }
        break;
      case NoiseKind::GaussianARMix:
        if (!(std::abs(rho) < 1)) throw Error(ErrorCode::InvalidParameter, "|rho| must be < 1");
        if (!(inflation > 0)) throw Error(ErrorCode::InvalidParameter, "inflation must be positive");
        if (!(mix_weight >= 0 && mix_weight <= 1)) {
          throw Error(ErrorCode::InvalidParameter, "mix_weight must lie in [0, 1]");
        }
        break;
      case NoiseKind::GaussianAR:
        if (!(std::abs(rho) < 1)) throw Error(ErrorCode::InvalidParameter, "|rho| must be < 1");
        if (!(scale > 0)) throw Error(ErrorCode::InvalidParameter, "scale must be positive");
        break;
    }
  }
};

namespace detail {

template <typename Scalar>
class MixtureScalarSampler {
 public:
  MixtureScalarSampler(const NoiseModel<Scalar>& model, rng::Stream& prng)
      : model_(model), prng_(prng) {}

  Scalar operator()() {
    const Scalar u = uniform_(prng_);
    if (u < model_.mix_weight) {
      // Pareto(shape) on [1, inf) by inversion; 1-U stays in (0, 1].
      const Scalar v = uniform_(prng_);
      return std::pow(Scalar(1) - v, Scalar(-1) / model_.shape);
    }
    return normal_(prng_);
  }

 private:
  const NoiseModel<Scalar>& model_;
  rng::Stream& prng_;
  std::uniform_real_distribution<Scalar> uniform_{0, 1};
  std::normal_distribution<Scalar> normal_{0, 1};
};

}  // namespace detail

template <typename Scalar>
MatrixX<Scalar> sample_noise(const NoiseModel<Scalar>& model, std::int64_t n, std::int64_t p,
                             rng::Stream& prng) {
  model.validate();
  if (n < 1 || p < 1) throw Error(ErrorCode::InvalidParameter, "need n >= 1 and p >= 1");
  MatrixX<Scalar> out(n, p);
  std::normal_distribution<Scalar> normal(0, 1);
  std::uniform_real_distribution<Scalar> uniform(0, 1);

  switch (model.kind) {
    case NoiseKind::ScaledT: {
      if (std::isinf(static_cast<double>(model.nu))) {
        for (std::int64_t i = 0; i < n; ++i) {
          for (std::int64_t c = 0; c < p; ++c) out(i, c) = model.scale * normal(prng);
        }
      } else {
        std::student_t_distribution<Scalar> t(model.nu);
        for (std::int64_t i = 0; i < n; ++i) {
          for (std::int64_t c = 0; c < p; ++c) out(i, c) = model.scale * t(prng);
        }
      }
      break;
    }
    case NoiseKind::DiffParetoGaussMix: {
      detail::MixtureScalarSampler<Scalar> draw(model, prng);
      for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t c = 0; c < p; ++c) {
          const Scalar a = draw();
          const Scalar b = draw();
          out(i, c) = a - b;
        }
      }
      break;
    }
    case NoiseKind::GaussianARMix:
    case NoiseKind::GaussianAR: {
      const Scalar innovation = std::sqrt(Scalar(1) - model.rho * model.rho);
      for (std::int64_t i = 0; i < n; ++i) {
        Scalar row_scale;
        if (model.kind == NoiseKind::GaussianARMix) {
          row_scale = std::sqrt(uniform(prng) < model.mix_weight ? model.inflation : Scalar(1));
        } else {
          row_scale = std::sqrt(model.scale);
        }
        Scalar z = normal(prng);
        out(i, 0) = row_scale * z;
        for (std::int64_t c = 1; c < p; ++c) {
          z = model.rho * z + innovation * normal(prng);
          out(i, c) = row_scale * z;
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace hlmt
