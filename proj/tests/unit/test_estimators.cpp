#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hlmt/estimators.hpp"
#include "oracles.hpp"

using hlmt::MedianConvention;
using hlmt::UnivariateSample;
using hlmt::PairedSamples;

namespace {

UnivariateSample<double> sample(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return UnivariateSample<double>(std::move(x));
}

UnivariateSample<double> sample(const Eigen::VectorXd& v) { return UnivariateSample<double>(v); }

// Integer-valued data on a dyadic grid: sums, halvings and shifts by integers
// are all exact in double precision, so equivariance holds bit for bit.
Eigen::VectorXd random_integer_data(std::mt19937_64& g, int n, int lo = -50, int hi = 50) {
  std::uniform_int_distribution<int> d(lo, hi);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = d(g);
  return x;
}

Eigen::VectorXd random_real_data(std::mt19937_64& g, int n) {
  std::normal_distribution<double> d(0.0, 3.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = d(g);
  return x;
}

}  // namespace

TEST_CASE("hl_one_sample matches the spec examples") {
  CHECK(hlmt::hl_one_sample(sample({1, 2, 3})).value == doctest::Approx(2.0));
  CHECK(hlmt::hl_one_sample(sample({1, 2, 3})).pair_count == 3);

  CHECK(hlmt::hl_one_sample(sample({5, 5, 5, 5})).value == 5.0);

  const auto s = sample({0, 1, 2, 4});  // pairs {0.5, 1, 1.5, 2, 2.5, 3}
  CHECK(hlmt::hl_one_sample(s, MedianConvention::Midpoint).value == 1.75);
  CHECK(hlmt::hl_one_sample(s, MedianConvention::LowerInf).value == 1.5);
  CHECK(hlmt::hl_one_sample(s).pair_count == 6);
}

TEST_CASE("hl_one_sample errors") {
  CHECK_THROWS_AS((void)hlmt::hl_one_sample(sample({1.0})), hlmt::Error);
  Eigen::VectorXd bad(3);
  bad << 1.0, std::nan(""), 2.0;
  CHECK_THROWS_AS((void)UnivariateSample<double>{bad}, hlmt::Error);
  Eigen::VectorXd inf(2);
  inf << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS((void)UnivariateSample<double>{inf}, hlmt::Error);
}

TEST_CASE("hl_two_sample matches the spec examples") {
  const PairedSamples<double> s(sample({3, 5}), sample({1, 2}));  // diffs {1,2,3,4}
  CHECK(hlmt::hl_two_sample(s, MedianConvention::Midpoint).value == 2.5);
  CHECK(hlmt::hl_two_sample(s, MedianConvention::LowerInf).value == 2.0);
  CHECK(hlmt::hl_two_sample(s).pair_count == 4);

  const PairedSamples<double> same(sample({1, 2}), sample({1, 2}));
  CHECK(hlmt::hl_two_sample(same, MedianConvention::Midpoint).value == 0.0);
  CHECK(hlmt::hl_two_sample(same, MedianConvention::LowerInf).value == 0.0);
}

TEST_CASE("two-sample shift equivariance is exact on integer data") {
  std::mt19937_64 g(7);
  for (int rep = 0; rep < 50; ++rep) {
    const auto x = random_integer_data(g, 9);
    const auto y = random_integer_data(g, 6);
    const double a = 10, b = 3;
    for (auto conv : {MedianConvention::Midpoint, MedianConvention::LowerInf}) {
      const double base = hlmt::hl_two_sample(PairedSamples<double>(sample(x), sample(y)), conv).value;
      const double shifted =
          hlmt::hl_two_sample(PairedSamples<double>(sample(x.array() + a), sample(y.array() + b)), conv)
              .value;
      CHECK(shifted == base + (a - b));
    }
  }
}

TEST_CASE("one-sample equivariance properties are exact on dyadic data") {
  std::mt19937_64 g(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto x = random_integer_data(g, 11);
    for (auto conv : {MedianConvention::Midpoint, MedianConvention::LowerInf}) {
      const double base = hlmt::hl_one_sample(sample(x), conv).value;
      // translation by an integer
      CHECK(hlmt::hl_one_sample(sample(x.array() + 17.0), conv).value == base + 17.0);
      // positive scale (power of two keeps products exact)
      CHECK(hlmt::hl_one_sample(sample(x * 4.0), conv).value == 4.0 * base);
    }
    // negation antisymmetry holds exactly for Midpoint on any data
    const auto xr = random_real_data(g, 12);
    const double v = hlmt::hl_one_sample(sample(xr), MedianConvention::Midpoint).value;
    CHECK(hlmt::hl_one_sample(sample(-xr), MedianConvention::Midpoint).value == -v);
  }
}

TEST_CASE("estimate lies within the pair value range") {
  std::mt19937_64 g(13);
  for (int rep = 0; rep < 30; ++rep) {
    const auto x = random_real_data(g, 2 + static_cast<int>(g() % 40));
    const auto pairs = oracles::enumerate_walsh(x);
    for (auto conv : {MedianConvention::Midpoint, MedianConvention::LowerInf}) {
      const double v = hlmt::hl_one_sample(sample(x), conv).value;
      CHECK(v >= pairs.front());
      CHECK(v <= pairs.back());
    }
  }
}

TEST_CASE("hl estimates agree with brute-force enumeration") {
  std::mt19937_64 g(17);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(g() % 30);
    const bool ties = (rep % 2) == 0;
    const auto x = ties ? random_integer_data(g, n, -4, 4) : random_real_data(g, n);
    const auto pairs = oracles::enumerate_walsh(x);
    CHECK(hlmt::hl_one_sample(sample(x), MedianConvention::Midpoint).value ==
          oracles::median_sorted(pairs, true));
    CHECK(hlmt::hl_one_sample(sample(x), MedianConvention::LowerInf).value ==
          oracles::median_sorted(pairs, false));

    const int m = 1 + static_cast<int>(g() % 20);
    const auto y = ties ? random_integer_data(g, m, -4, 4) : random_real_data(g, m);
    const auto diffs = oracles::enumerate_diffs(x, y);
    const PairedSamples<double> s(sample(x), sample(y));
    CHECK(hlmt::hl_two_sample(s, MedianConvention::Midpoint).value ==
          oracles::median_sorted(diffs, true));
    CHECK(hlmt::hl_two_sample(s, MedianConvention::LowerInf).value ==
          oracles::median_sorted(diffs, false));
  }
}

TEST_CASE("u_process_eval") {
  const auto s = sample({0, 1, 2, 4});
  CHECK(hlmt::u_process_eval(s, 100.0) == 1.0);
  CHECK(hlmt::u_process_eval(s, -1.0) == 0.0);
  CHECK(hlmt::u_process_eval(s, 1.5) == doctest::Approx(0.5));

  std::mt19937_64 g(19);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 2 + static_cast<int>(g() % 30);
    const auto x = (rep % 2) ? random_real_data(g, n) : random_integer_data(g, n, -3, 3);
    const auto pairs = oracles::enumerate_walsh(x);
    const auto xs = sample(x);

    // defining property of the LowerInf estimate
    const double est = hlmt::hl_one_sample(xs, MedianConvention::LowerInf).value;
    CHECK(hlmt::u_process_eval(xs, est) >= 0.5);
    for (double t : pairs) {
      if (t < est) CHECK(hlmt::u_process_eval(xs, t) < 0.5);
    }

    // brute-force count agreement and monotonicity on a grid
    double prev = -1.0;
    for (double t : {pairs.front() - 1.0, pairs.front(), pairs[pairs.size() / 2], pairs.back(),
                     pairs.back() + 1.0}) {
      const auto cnt = static_cast<double>(
          std::count_if(pairs.begin(), pairs.end(), [&](double v) { return v <= t; }));
      const double u = hlmt::u_process_eval(xs, t);
      CHECK(u == cnt / static_cast<double>(pairs.size()));
      CHECK(u >= prev);
      prev = u;
    }
  }
}

TEST_CASE("sample_median") {
  CHECK(hlmt::sample_median(sample({1, 2, 3})) == 2.0);
  CHECK(hlmt::sample_median(sample({1, 2, 3, 4}), MedianConvention::Midpoint) == 2.5);
  CHECK(hlmt::sample_median(sample({1, 2, 3, 4}), MedianConvention::LowerInf) == 2.0);
  CHECK(hlmt::sample_median(sample({7.0})) == 7.0);

  // permutation invariance
  std::mt19937_64 g(23);
  Eigen::VectorXd x = random_real_data(g, 15);
  const double ref = hlmt::sample_median(sample(x));
  for (int rep = 0; rep < 10; ++rep) {
    std::shuffle(x.data(), x.data() + x.size(), g);
    CHECK(hlmt::sample_median(sample(x)) == ref);
  }
}

TEST_CASE("nonoverlap_pair_estimate basics") {
  // constant sample
  Eigen::VectorXd c = Eigen::VectorXd::Constant(20, 3.25);
  CHECK(hlmt::nonoverlap_pair_estimate(UnivariateSample<double>(c), 5, 42) == 3.25);

  // translation equivariance under the same seed (integer shift, dyadic data)
  std::mt19937_64 g(29);
  const auto x = random_integer_data(g, 21);  // odd n: trailing element dropped
  const double base = hlmt::nonoverlap_pair_estimate(sample(x), 5, 99);
  const double shifted = hlmt::nonoverlap_pair_estimate(sample(x.array() + 8.0), 5, 99);
  CHECK(shifted == base + 8.0);

  CHECK_THROWS_AS((void)hlmt::nonoverlap_pair_estimate(sample({1, 2, 3}), 5, 1), hlmt::Error);
  CHECK_THROWS_AS((void)hlmt::nonoverlap_pair_estimate(sample(x), 0, 1), hlmt::Error);
}

TEST_CASE("nonoverlap_pair_estimate tracks the exact HL estimate" * doctest::timeout(120)) {
  // t3 noise, n = 500, 5 permutations: mean difference to the exact HL
  // estimate stays within 3 Monte-Carlo standard errors over 200 replications.
  const int reps = 200, n = 500;
  std::mt19937_64 g(31);
  std::student_t_distribution<double> t3(3.0);
  double sum_d = 0.0, sum_d2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = t3(g);
    const auto xs = sample(x);
    const double exact = hlmt::hl_one_sample(xs).value;
    const double approx = hlmt::nonoverlap_pair_estimate(xs, 5, 1000 + r);
    const double d = approx - exact;
    sum_d += d;
    sum_d2 += d * d;
  }
  const double mean = sum_d / reps;
  const double sd = std::sqrt((sum_d2 - reps * mean * mean) / (reps - 1));
  const double se = sd / std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(mean) <= 3.0 * se);
}
