#pragma once

// Simulation harness: declarative experiment configs (cases 1-8), dataset
// synthesis, the sample-mean and Student-t baselines, relative-efficiency
// Monte Carlo, and the replication runner. Replications are data-parallel;
// every replication derives its own streams from (seed, replication index),
// so row output is byte-identical for any worker count.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hlmt/multitest.hpp"
#include "hlmt/noise.hpp"

namespace hlmt {

enum class SimTask { GlobalTest, Fdp };
enum class SimMethod { HL, Mean, StudentT };

inline const char* sim_task_name(SimTask t) { return t == SimTask::GlobalTest ? "global" : "fdp"; }

inline const char* sim_method_name(SimMethod m) {
  switch (m) {
    case SimMethod::HL: return "hl";
    case SimMethod::Mean: return "mean";
    case SimMethod::StudentT: return "student_t";
  }
  return "?";
}

struct SimulationConfig {
  int case_id = 1;
  SimTask task = SimTask::GlobalTest;
  SimMethod method = SimMethod::HL;
  std::int64_t n = 300;
  std::int64_t m = 0;  // two-sample cases; 0 resolves to n at load time
  std::int64_t p = 400;
  double mu = 0.0;                 // signal magnitude on the leading coordinates
  std::int64_t signal_count = 50;  // number of signal coordinates when mu != 0
  std::vector<double> alphas{0.05};
  std::int64_t bootstrap_replicates = 300;  // B
  std::int64_t replications = 500;
  std::uint64_t seed = 0;
  PValueMode pvalue_mode = PValueMode::Smoothed;
  MedianConvention convention = MedianConvention::Midpoint;

  bool two_sample() const {
    return case_id == 4 || case_id == 5 || case_id == 6 || case_id == 8;
  }

  void validate() const {
    if (case_id < 1 || case_id > 8) throw Error(ErrorCode::ConfigError, "case_id must be in 1..8");
    if (n < 4) throw Error(ErrorCode::ConfigError, "n must be >= 4");
    if (two_sample() && m < 4) throw Error(ErrorCode::ConfigError, "m must be >= 4 for two-sample cases");
    if (p < 1) throw Error(ErrorCode::ConfigError, "p must be >= 1");
    if (signal_count < 0 || signal_count > p) {
      throw Error(ErrorCode::ConfigError, "signal_count must lie in [0, p]");
    }
    if (alphas.empty()) throw Error(ErrorCode::ConfigError, "alphas must not be empty");
    for (double a : alphas) {
      if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::ConfigError, "alphas must lie in (0, 1)");
    }
    if (bootstrap_replicates < 1) throw Error(ErrorCode::ConfigError, "B must be >= 1");
    if (replications < 1) throw Error(ErrorCode::ConfigError, "reps must be >= 1");
    if (method == SimMethod::Mean && task != SimTask::GlobalTest) {
      throw Error(ErrorCode::ConfigError, "method mean applies to the global task only");
    }
    if (method == SimMethod::StudentT && task != SimTask::Fdp) {
      throw Error(ErrorCode::ConfigError, "method student_t applies to the fdp task only");
    }
  }

  std::pair<NoiseModel<double>, std::optional<NoiseModel<double>>> noise_models() const {
    using NM = NoiseModel<double>;
    switch (case_id) {
      case 1: return {NM::scaled_t(3, 0.3), {}};
      case 2: return {NM::diff_pareto_gauss_mix(2, 0.2), {}};
      case 3: return {NM::gaussian_ar_mix(0.7, 10, 0.2), {}};
      case 4: return {NM::gaussian_ar(0.7, 1.5), NM::gaussian_ar(0.7, 1.0)};
      case 5: return {NM::gaussian_ar_mix(0.7, 10, 0.2), NM::diff_pareto_gauss_mix(2, 0.2)};
      case 6: return {NM::scaled_t(3, 0.3), NM::scaled_t(3, 0.3)};
      case 7: return {NM::scaled_t(1, 0.3), {}};
      case 8: return {NM::scaled_t(1, 0.3), NM::scaled_t(1, 0.3)};
    }
    throw Error(ErrorCode::ConfigError, "case_id must be in 1..8");
  }
};

struct ExperimentRow {
  int case_id;
  SimTask task;
  SimMethod method;
  std::int64_t n, m, p;
  double mu;
  std::int64_t signal_count;
  double alpha;
  std::int64_t bootstrap_replicates;
  std::int64_t replications;
  std::uint64_t seed;
  std::optional<double> reject_rate;  // global task
  std::optional<double> mean_fdp;     // fdp task
  std::optional<double> mean_tpp;     // fdp task
};

// X = theta + noise (and Y = noise for two-sample cases, so the shift Theta
// equals theta). The noise streams depend on (seed, rep) only, never on mu:
// power curves across mu share their noise realizations.
inline MultivariateDataset<double> build_dataset(const SimulationConfig& cfg,
                                                 std::int64_t rep_index) {
  cfg.validate();
  const auto [model_x, model_y] = cfg.noise_models();
  auto prng_x =
      rng::make_stream(cfg.seed, {rng::kTagDatasetX, static_cast<std::uint64_t>(rep_index)});
  Eigen::MatrixXd x = sample_noise(model_x, cfg.n, cfg.p, prng_x);
  if (cfg.mu != 0.0) {
    x.leftCols(cfg.signal_count).array() += cfg.mu;
  }
  std::optional<Eigen::MatrixXd> y;
  if (cfg.two_sample()) {
    auto prng_y =
        rng::make_stream(cfg.seed, {rng::kTagDatasetY, static_cast<std::uint64_t>(rep_index)});
    y = sample_noise(*model_y, cfg.m, cfg.p, prng_y);
  }
  return MultivariateDataset<double>(std::move(x), std::move(y));
}

namespace detail {

struct MeanCore {
  Eigen::VectorXd statistics;          // sqrt(n)-scaled mean vector (signed)
  std::vector<double> max_draws;       // sorted max-abs of N(0, Sigma_hat) draws
};

// Gaussian draws calibrated by the sample covariance; near-singular matrices
// (p close to n) are handled by flooring eigenvalues at 1e-10 * trace / p.
inline std::vector<double> max_abs_gaussian_draws(const Eigen::MatrixXd& sigma, std::int64_t b,
                                                  std::uint64_t seed) {
  const auto p = sigma.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularCovariance, "eigendecomposition failed");
  }
  const double floor = 1e-10 * std::max(sigma.trace(), 0.0) / static_cast<double>(p);
  Eigen::VectorXd scale = es.eigenvalues().cwiseMax(floor).cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd root = es.eigenvectors() * scale.asDiagonal();
  std::vector<double> draws(static_cast<std::size_t>(b));
  parallel::parallel_for(b, [&](std::int64_t i) {
    auto prng = rng::make_stream(seed, {rng::kTagMeanBoot, static_cast<std::uint64_t>(i)});
    std::normal_distribution<double> normal(0, 1);
    Eigen::VectorXd g(p);
    for (Eigen::Index c = 0; c < p; ++c) g[c] = normal(prng);
    draws[static_cast<std::size_t>(i)] = (root * g).cwiseAbs().maxCoeff();
  });
  std::sort(draws.begin(), draws.end());
  return draws;
}

inline MeanCore mean_core_one(const Eigen::MatrixXd& x, std::int64_t b, std::uint64_t seed) {
  require_matrix(x, 2, "mean global test");
  const auto n = static_cast<double>(x.rows());
  const Eigen::VectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  const Eigen::MatrixXd sigma = centered.transpose() * centered / (n - 1.0);
  MeanCore core;
  core.statistics = std::sqrt(n) * mean;
  core.max_draws = max_abs_gaussian_draws(sigma, b, seed);
  return core;
}

inline MeanCore mean_core_two(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::int64_t b,
                              std::uint64_t seed) {
  require_matrix(x, 2, "mean global test");
  require_matrix(y, 2, "mean global test");
  if (x.cols() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "x and y must have the same number of columns");
  }
  const auto n = static_cast<double>(x.rows());
  const auto m = static_cast<double>(y.rows());
  const Eigen::VectorXd mx = x.colwise().mean();
  const Eigen::VectorXd my = y.colwise().mean();
  const Eigen::MatrixXd cx = x.rowwise() - mx.transpose();
  const Eigen::MatrixXd cy = y.rowwise() - my.transpose();
  const Eigen::MatrixXd sigma =
      (cx.transpose() * cx + cy.transpose() * cy) / (n + m - 2.0);
  MeanCore core;
  core.statistics = std::sqrt(n * m / (n + m)) * (mx - my);
  core.max_draws = max_abs_gaussian_draws(sigma, b, seed);
  return core;
}

inline GlobalTestResult<double> finish_mean_test(MeanCore core, double alpha, std::int64_t b) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0, 1)");
  }
  const double max_stat = core.statistics.cwiseAbs().maxCoeff();
  const double critical =
      core.max_draws[static_cast<std::size_t>(
          inf_quantile_rank(static_cast<std::int64_t>(core.max_draws.size()), 1.0 - alpha) - 1)];
  return {std::move(core.statistics), max_stat, critical, max_stat > critical, alpha, b};
}

inline double normal_two_sided_pvalue(double t) { return std::erfc(std::abs(t) / std::sqrt(2.0)); }

}  // namespace detail

// Sample-mean baseline: max_l sqrt(n)|mean_l| against the (1-alpha) quantile
// of max-abs draws from N(0, Sigma_hat).
inline GlobalTestResult<double> mean_global_test(const Eigen::MatrixXd& x, double alpha,
                                                 std::int64_t b, std::uint64_t seed) {
  return detail::finish_mean_test(detail::mean_core_one(x, b, seed), alpha, b);
}

inline GlobalTestResult<double> mean_global_test(const Eigen::MatrixXd& x,
                                                 const Eigen::MatrixXd& y, double alpha,
                                                 std::int64_t b, std::uint64_t seed) {
  return detail::finish_mean_test(detail::mean_core_two(x, y, b, seed), alpha, b);
}

// Two-sided p-values of per-coordinate t statistics under the standard normal
// calibration. Zero-variance columns yield p = 1 for a zero mean and the
// smallest positive double otherwise.
inline Eigen::VectorXd student_t_pvalues(const Eigen::MatrixXd& x) {
  detail::require_matrix(x, 2, "t statistics");
  const auto n = static_cast<double>(x.rows());
  Eigen::VectorXd pvals(x.cols());
  for (Eigen::Index l = 0; l < x.cols(); ++l) {
    const double mean = x.col(l).mean();
    const double sd = std::sqrt((x.col(l).array() - mean).square().sum() / (n - 1.0));
    if (sd == 0.0) {
      pvals[l] = (mean == 0.0) ? 1.0 : std::numeric_limits<double>::min();
    } else {
      pvals[l] = detail::normal_two_sided_pvalue(std::sqrt(n) * mean / sd);
    }
  }
  return pvals;
}

// Welch standardization for the two-sample case.
inline Eigen::VectorXd student_t_pvalues(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  detail::require_matrix(x, 2, "t statistics");
  detail::require_matrix(y, 2, "t statistics");
  if (x.cols() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "x and y must have the same number of columns");
  }
  const auto n = static_cast<double>(x.rows());
  const auto m = static_cast<double>(y.rows());
  Eigen::VectorXd pvals(x.cols());
  for (Eigen::Index l = 0; l < x.cols(); ++l) {
    const double mx = x.col(l).mean();
    const double my = y.col(l).mean();
    const double vx = (x.col(l).array() - mx).square().sum() / (n - 1.0);
    const double vy = (y.col(l).array() - my).square().sum() / (m - 1.0);
    const double denom = std::sqrt(vx / n + vy / m);
    if (denom == 0.0) {
      pvals[l] = (mx == my) ? 1.0 : std::numeric_limits<double>::min();
    } else {
      pvals[l] = detail::normal_two_sided_pvalue((mx - my) / denom);
    }
  }
  return pvals;
}

// Monte-Carlo relative efficiency Var(sample median) / Var(HL estimate) for
// t_nu noise (nu = +inf selects the normal law).
inline double are_monte_carlo(double nu, std::int64_t n, std::int64_t reps, std::uint64_t seed) {
  if (!(nu > 0)) throw Error(ErrorCode::InvalidParameter, "nu must be positive");
  if (n < 2) throw Error(ErrorCode::InvalidParameter, "n must be >= 2");
  if (reps < 1000) throw Error(ErrorCode::InvalidParameter, "reps must be >= 1000");
  std::vector<double> hl(static_cast<std::size_t>(reps));
  std::vector<double> med(static_cast<std::size_t>(reps));
  parallel::parallel_for(reps, [&](std::int64_t r) {
    auto prng = rng::make_stream(seed, {rng::kTagAre, static_cast<std::uint64_t>(r)});
    std::vector<double> x(static_cast<std::size_t>(n));
    if (std::isinf(nu)) {
      std::normal_distribution<double> normal(0, 1);
      for (auto& v : x) v = normal(prng);
    } else {
      std::student_t_distribution<double> t(nu);
      for (auto& v : x) v = t(prng);
    }
    std::sort(x.begin(), x.end());
    hl[static_cast<std::size_t>(r)] = detail::hl_from_sorted(x.data(), n, MedianConvention::Midpoint);
    med[static_cast<std::size_t>(r)] = detail::median_inplace(x, MedianConvention::Midpoint);
  });
  auto variance = [](const std::vector<double>& v) {
    const auto k = static_cast<double>(v.size());
    double mean = 0;
    for (double d : v) mean += d;
    mean /= k;
    double ss = 0;
    for (double d : v) ss += (d - mean) * (d - mean);
    return ss / (k - 1.0);
  };
  return variance(med) / variance(hl);
}

namespace detail {

inline std::vector<Eigen::Index> null_coordinates(const SimulationConfig& cfg) {
  std::vector<Eigen::Index> h0;
  const std::int64_t first_null = (cfg.mu == 0.0) ? 0 : cfg.signal_count;
  for (std::int64_t l = first_null; l < cfg.p; ++l) h0.push_back(static_cast<Eigen::Index>(l));
  return h0;
}

}  // namespace detail

// Runs the configured experiment and aggregates one row per alpha:
// rejection rates for the global task, mean FDP and mean TPP for fdp.
inline std::vector<ExperimentRow> run_experiment(const SimulationConfig& cfg) {
  cfg.validate();
  const auto reps = cfg.replications;
  const auto n_alpha = static_cast<std::int64_t>(cfg.alphas.size());

  // per replication, per alpha: rejection flag or (fdp, tpp)
  std::vector<double> metric_a(static_cast<std::size_t>(reps * n_alpha));
  std::vector<double> metric_b(static_cast<std::size_t>(reps * n_alpha), 0.0);
  const auto h0 = detail::null_coordinates(cfg);

  parallel::parallel_for(reps, [&](std::int64_t r) {
    const auto ds = build_dataset(cfg, r);
    BootstrapConfig bcfg;
    bcfg.replicates = cfg.bootstrap_replicates;
    bcfg.seed = rng::derive(cfg.seed, {rng::kTagReplication, static_cast<std::uint64_t>(r)});
    const auto at = [&](std::int64_t a) { return static_cast<std::size_t>(r * n_alpha + a); };

    if (cfg.task == SimTask::GlobalTest) {
      std::vector<double> max_devs;
      double max_stat = 0;
      if (cfg.method == SimMethod::HL) {
        auto core = ds.two_sample()
                        ? detail::global_core_two(ds.x, *ds.y, bcfg, cfg.convention)
                        : detail::global_core_one(ds.x, bcfg, cfg.convention);
        max_stat = core.estimates.cwiseAbs().maxCoeff();
        max_devs = std::move(core.max_deviations);
      } else {
        auto core = ds.two_sample()
                        ? detail::mean_core_two(ds.x, *ds.y, cfg.bootstrap_replicates, bcfg.seed)
                        : detail::mean_core_one(ds.x, cfg.bootstrap_replicates, bcfg.seed);
        max_stat = core.statistics.cwiseAbs().maxCoeff();
        max_devs = std::move(core.max_draws);
      }
      for (std::int64_t a = 0; a < n_alpha; ++a) {
        const auto b = static_cast<std::int64_t>(max_devs.size());
        const double critical = max_devs[static_cast<std::size_t>(
            detail::inf_quantile_rank(b, 1.0 - cfg.alphas[static_cast<std::size_t>(a)]) - 1)];
        metric_a[at(a)] = (max_stat > critical) ? 1.0 : 0.0;
      }
    } else {
      Eigen::VectorXd pvals;
      if (cfg.method == SimMethod::HL) {
        pvals = ds.two_sample() ? coordinate_pvalues_two(ds.x, *ds.y, bcfg, cfg.convention,
                                                         cfg.pvalue_mode)
                                : coordinate_pvalues_one(ds.x, bcfg, cfg.convention,
                                                         cfg.pvalue_mode);
      } else {
        pvals = ds.two_sample() ? student_t_pvalues(ds.x, *ds.y) : student_t_pvalues(ds.x);
      }
      for (std::int64_t a = 0; a < n_alpha; ++a) {
        const auto result = bh_threshold(pvals, cfg.alphas[static_cast<std::size_t>(a)]);
        const auto report = fdp_tpp(result, h0);
        metric_a[at(a)] = report.fdp;
        metric_b[at(a)] = report.tpp;
      }
    }
  });

  std::vector<ExperimentRow> rows;
  rows.reserve(static_cast<std::size_t>(n_alpha));
  for (std::int64_t a = 0; a < n_alpha; ++a) {
    double sum_a = 0, sum_b = 0;
    for (std::int64_t r = 0; r < reps; ++r) {
      sum_a += metric_a[static_cast<std::size_t>(r * n_alpha + a)];
      sum_b += metric_b[static_cast<std::size_t>(r * n_alpha + a)];
    }
    ExperimentRow row{cfg.case_id,
                      cfg.task,
                      cfg.method,
                      cfg.n,
                      cfg.two_sample() ? cfg.m : 0,
                      cfg.p,
                      cfg.mu,
                      cfg.signal_count,
                      cfg.alphas[static_cast<std::size_t>(a)],
                      cfg.bootstrap_replicates,
                      reps,
                      cfg.seed,
                      {},
                      {},
                      {}};
    if (cfg.task == SimTask::GlobalTest) {
      row.reject_rate = sum_a / static_cast<double>(reps);
    } else {
      row.mean_fdp = sum_a / static_cast<double>(reps);
      row.mean_tpp = sum_b / static_cast<double>(reps);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hlmt
