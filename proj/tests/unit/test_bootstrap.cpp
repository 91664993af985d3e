#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hlmt/bootstrap.hpp"
#include "hlmt/parallel.hpp"

using hlmt::BootstrapConfig;
using hlmt::MedianConvention;
using hlmt::PairedSamples;
using hlmt::PValueMode;
using hlmt::UnivariateSample;
using hlmt::WeightDraw;

namespace {

UnivariateSample<double> sample(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return UnivariateSample<double>(std::move(x));
}

WeightDraw explicit_draw(std::initializer_list<int> w) {
  WeightDraw d;
  for (int v : w) d.weights.push_back(static_cast<std::uint8_t>(v));
  return d;
}

}  // namespace

TEST_CASE("gen_weight_draw support, frequency and determinism") {
  auto g1 = hlmt::rng::make_stream(42, {1, 2});
  auto g2 = hlmt::rng::make_stream(42, {1, 2});
  const auto d1 = hlmt::gen_weight_draw(10000, g1);
  const auto d2 = hlmt::gen_weight_draw(10000, g2);
  CHECK(d1.weights == d2.weights);

  std::int64_t twos = 0;
  for (auto w : d1.weights) {
    REQUIRE((w == 0 || w == 2));
    twos += (w == 2);
  }
  const double frac = static_cast<double>(twos) / 10000.0;
  CHECK(frac >= 0.47);
  CHECK(frac <= 0.53);

  CHECK(d1.subset_size() == twos);
  CHECK_THROWS_AS((void)hlmt::gen_weight_draw(0, g1), hlmt::Error);
}

TEST_CASE("bootstrap_replicate_one examples") {
  const auto x = sample({0, 1, 2, 4});
  // full subset reproduces the full-sample estimate
  CHECK(hlmt::bootstrap_replicate_one(x, explicit_draw({2, 2, 2, 2})) ==
        hlmt::hl_one_sample(x).value);
  // S = {1, 2, 4} (1-based): walsh {0.5, 2, 2.5}, midpoint median 2
  CHECK(hlmt::bootstrap_replicate_one(x, explicit_draw({2, 2, 0, 2})) == 2.0);
  // constant sample
  const auto c = sample({3, 3, 3, 3});
  CHECK(hlmt::bootstrap_replicate_one(c, explicit_draw({0, 2, 2, 0})) == 3.0);
  // degenerate subsample signals a redraw
  CHECK_THROWS_AS((void)hlmt::bootstrap_replicate_one(x, explicit_draw({0, 0, 2, 0})), hlmt::Error);
  CHECK_THROWS_AS((void)hlmt::bootstrap_replicate_one(x, explicit_draw({2, 2})), hlmt::Error);
}

TEST_CASE("bootstrap_replicate_two examples") {
  const PairedSamples<double> s(sample({3, 5}), sample({1, 2}));
  CHECK(hlmt::bootstrap_replicate_two(s, explicit_draw({2, 2}), explicit_draw({2, 2})) ==
        hlmt::hl_two_sample(s).value);
  // Sx = {2}, Sy = {1, 2}: diffs {4, 3}, midpoint median 3.5
  CHECK(hlmt::bootstrap_replicate_two(s, explicit_draw({0, 2}), explicit_draw({2, 2})) == 3.5);
  const PairedSamples<double> same(sample({1, 2, 3}), sample({1, 2, 3}));
  CHECK(hlmt::bootstrap_replicate_two(same, explicit_draw({2, 2, 2}), explicit_draw({2, 2, 2})) ==
        0.0);
  CHECK_THROWS_AS(
      (void)hlmt::bootstrap_replicate_two(s, explicit_draw({0, 0}), explicit_draw({2, 2})),
      hlmt::Error);
}

TEST_CASE("bootstrap_distribution: constant sample, determinism, composition") {
  BootstrapConfig cfg;
  cfg.replicates = 50;
  cfg.seed = 7;

  Eigen::VectorXd cvec = Eigen::VectorXd::Constant(12, 2.5);
  const auto cdist = hlmt::bootstrap_distribution(UnivariateSample<double>(cvec), cfg);
  CHECK(cdist.center == 2.5);
  for (double d : cdist.deviations) CHECK(d == 0.0);

  std::mt19937_64 g(5);
  std::normal_distribution<double> nd(0, 1);
  Eigen::VectorXd xv(40);
  for (auto& v : xv.reshaped()) v = nd(g);
  const UnivariateSample<double> x(xv);

  // identical output for any worker count
  hlmt::parallel::set_thread_limit(1);
  const auto d1 = hlmt::bootstrap_distribution(x, cfg);
  hlmt::parallel::set_thread_limit(4);
  const auto d2 = hlmt::bootstrap_distribution(x, cfg);
  hlmt::parallel::set_thread_limit(0);
  CHECK(d1.deviations == d2.deviations);
  CHECK(d1.center == d2.center);
  CHECK(std::is_sorted(d1.deviations.begin(), d1.deviations.end()));

  // the engine agrees with gen_weight_draw + bootstrap_replicate_one composed
  // over the same per-replicate streams
  std::vector<double> recomputed;
  for (std::int64_t b = 0; b < cfg.replicates; ++b) {
    auto prng = hlmt::rng::make_stream(cfg.seed,
                                       {hlmt::rng::kTagBootOne, 0, static_cast<std::uint64_t>(b)});
    WeightDraw draw = hlmt::gen_weight_draw(x.size(), prng);
    while (draw.subset_size() < cfg.min_subsample) draw = hlmt::gen_weight_draw(x.size(), prng);
    recomputed.push_back(std::abs(hlmt::bootstrap_replicate_one(x, draw) - d1.center));
  }
  std::sort(recomputed.begin(), recomputed.end());
  CHECK(recomputed == d1.deviations);
}

TEST_CASE("two-sample bootstrap_distribution composition") {
  std::mt19937_64 g(15);
  std::normal_distribution<double> nd(0, 1);
  Eigen::VectorXd xv(25), yv(30);
  for (auto& v : xv.reshaped()) v = nd(g);
  for (auto& v : yv.reshaped()) v = nd(g) + 1.0;
  const PairedSamples<double> s{UnivariateSample<double>(xv), UnivariateSample<double>(yv)};

  BootstrapConfig cfg;
  cfg.replicates = 40;
  cfg.seed = 99;
  const auto dist = hlmt::bootstrap_distribution(s, cfg);
  CHECK(dist.center == hlmt::hl_two_sample(s).value);

  const auto n = xv.size();
  const auto m = yv.size();
  std::vector<double> recomputed;
  for (std::int64_t b = 0; b < cfg.replicates; ++b) {
    auto prng = hlmt::rng::make_stream(cfg.seed,
                                       {hlmt::rng::kTagBootTwo, 0, static_cast<std::uint64_t>(b)});
    for (;;) {
      const WeightDraw joint = hlmt::gen_weight_draw(n + m, prng);
      WeightDraw wx, wy;
      wx.weights.assign(joint.weights.begin(), joint.weights.begin() + n);
      wy.weights.assign(joint.weights.begin() + n, joint.weights.end());
      if (wx.subset_size() >= cfg.min_subsample && wy.subset_size() >= cfg.min_subsample) {
        recomputed.push_back(std::abs(hlmt::bootstrap_replicate_two(s, wx, wy) - dist.center));
        break;
      }
    }
  }
  std::sort(recomputed.begin(), recomputed.end());
  CHECK(recomputed == dist.deviations);
}

TEST_CASE("bootstrap deviations track the sampling spread" * doctest::timeout(300)) {
  // n = 200 standard normal, B = 300: the median deviation is within a factor
  // of two of the Monte-Carlo standard deviation of the estimator itself.
  const int n = 200, mc = 400;
  std::vector<double> estimates;
  for (int r = 0; r < mc; ++r) {
    auto prng = hlmt::rng::make_stream(1234, {77, static_cast<std::uint64_t>(r)});
    std::normal_distribution<double> nd(0, 1);
    Eigen::VectorXd xv(n);
    for (auto& v : xv.reshaped()) v = nd(prng);
    estimates.push_back(hlmt::hl_one_sample(UnivariateSample<double>(xv)).value);
  }
  double mean = 0;
  for (double e : estimates) mean += e;
  mean /= mc;
  double ss = 0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  const double mc_sd = std::sqrt(ss / (mc - 1));

  auto prng = hlmt::rng::make_stream(1234, {78});
  std::normal_distribution<double> nd(0, 1);
  Eigen::VectorXd xv(n);
  for (auto& v : xv.reshaped()) v = nd(prng);
  BootstrapConfig cfg;
  cfg.replicates = 300;
  cfg.seed = 4321;
  const auto dist = hlmt::bootstrap_distribution(UnivariateSample<double>(xv), cfg);
  const double med_dev = dist.deviations[dist.deviations.size() / 2];
  CHECK(med_dev <= 2.0 * mc_sd);
  CHECK(med_dev >= 0.5 * mc_sd * 0.6745);  // median of |N(0,s)| = 0.6745 s
}

TEST_CASE("bootstrap_quantile") {
  hlmt::BootstrapDistribution<double> dist;
  dist.center = 0;
  dist.seed = 0;
  dist.replicates = 100;
  for (int i = 1; i <= 100; ++i) dist.deviations.push_back(i);
  CHECK(hlmt::bootstrap_quantile(dist, 0.95) == 95.0);
  CHECK(hlmt::bootstrap_quantile(dist, 1.0) == 100.0);
  CHECK(hlmt::bootstrap_quantile(dist, 1e-9) == 1.0);
  CHECK(hlmt::bootstrap_quantile(dist, 0.07) == 7.0);  // ceil rounding trap

  double prev = 0;
  for (double level = 0.01; level <= 1.0; level += 0.01) {
    const double q = hlmt::bootstrap_quantile(dist, level);
    CHECK(q >= prev);
    prev = q;
  }

  hlmt::BootstrapDistribution<double> empty{0.0, {}, 0, 0};
  CHECK_THROWS_AS((void)hlmt::bootstrap_quantile(empty, 0.5), hlmt::Error);
  CHECK_THROWS_AS((void)hlmt::bootstrap_quantile(dist, 0.0), hlmt::Error);
  CHECK_THROWS_AS((void)hlmt::bootstrap_quantile(dist, 1.5), hlmt::Error);
}

TEST_CASE("confidence_interval basics") {
  BootstrapConfig cfg;
  cfg.replicates = 100;
  cfg.seed = 3;
  Eigen::VectorXd cvec = Eigen::VectorXd::Constant(10, -1.5);
  const auto ci =
      hlmt::confidence_interval<double>(UnivariateSample<double>(cvec), cfg, 0.05);
  CHECK(ci.lower == -1.5);
  CHECK(ci.upper == -1.5);
  CHECK(ci.center == -1.5);
  CHECK(ci.level == doctest::Approx(0.95));

  std::mt19937_64 g(8);
  std::normal_distribution<double> nd(0, 1);
  Eigen::VectorXd xv(30);
  for (auto& v : xv.reshaped()) v = nd(g);
  const auto ci2 = hlmt::confidence_interval<double>(UnivariateSample<double>(xv), cfg, 0.1);
  CHECK(ci2.lower <= ci2.center);
  CHECK(ci2.center <= ci2.upper);
  CHECK_THROWS_AS((void)hlmt::confidence_interval<double>(UnivariateSample<double>(xv), cfg, 0.0),
                  hlmt::Error);
}

TEST_CASE("bootstrap_pvalue") {
  hlmt::BootstrapDistribution<double> dist{2.5, {1, 2, 3, 4}, 0, 4};
  CHECK(hlmt::bootstrap_pvalue(dist, PValueMode::Raw) == 0.5);  // {3,4} exceed 2.5

  dist.center = 0.0;
  CHECK(hlmt::bootstrap_pvalue(dist, PValueMode::Smoothed) == 1.0);

  dist.center = 100.0;
  CHECK(hlmt::bootstrap_pvalue(dist, PValueMode::Smoothed) == doctest::Approx(1.0 / 5.0));
  CHECK(hlmt::bootstrap_pvalue(dist, PValueMode::Raw) == 0.0);

  // ties: Raw uses strict >, Smoothed counts the tie
  dist.center = 3.0;
  CHECK(hlmt::bootstrap_pvalue(dist, PValueMode::Raw) == doctest::Approx(0.25));
  CHECK(hlmt::bootstrap_pvalue(dist, PValueMode::Smoothed) == doctest::Approx(3.0 / 5.0));

  // monotone nonincreasing in |center|, smoothed bounded below by 1/(B+1)
  double prev_s = 2.0, prev_r = 2.0;
  for (double c = 0.0; c <= 5.0; c += 0.25) {
    dist.center = c;
    const double ps = hlmt::bootstrap_pvalue(dist, PValueMode::Smoothed);
    const double pr = hlmt::bootstrap_pvalue(dist, PValueMode::Raw);
    CHECK(ps <= prev_s);
    CHECK(pr <= prev_r);
    CHECK(ps >= 1.0 / 5.0);
    CHECK(pr >= 0.0);
    prev_s = ps;
    prev_r = pr;
  }

  hlmt::BootstrapDistribution<double> empty{0.0, {}, 0, 0};
  CHECK_THROWS_AS((void)hlmt::bootstrap_pvalue(empty), hlmt::Error);
}

TEST_CASE("smoothed p-values are near-uniform under the null" * doctest::timeout(600)) {
  // symmetric noise, theta = 0, n = 100, B = 200: fraction of p <= 0.05 over
  // 1000 replications stays at or below 0.08.
  const int reps = 1000, n = 100;
  std::int64_t hits = 0;
  std::vector<double> pvals(reps);
  hlmt::parallel::parallel_for(reps, [&](std::int64_t r) {
    auto prng = hlmt::rng::make_stream(2024, {5, static_cast<std::uint64_t>(r)});
    std::normal_distribution<double> nd(0, 1);
    Eigen::VectorXd xv(n);
    for (auto& v : xv.reshaped()) v = nd(prng);
    BootstrapConfig cfg;
    cfg.replicates = 200;
    cfg.seed = hlmt::rng::derive(2024, {6, static_cast<std::uint64_t>(r)});
    const auto dist = hlmt::bootstrap_distribution(UnivariateSample<double>(xv), cfg);
    pvals[static_cast<std::size_t>(r)] = hlmt::bootstrap_pvalue(dist, PValueMode::Smoothed);
  });
  for (double p : pvals) hits += (p <= 0.05);
  CHECK(static_cast<double>(hits) / reps <= 0.08);
}
