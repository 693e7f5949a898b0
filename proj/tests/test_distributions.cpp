#include <cmath>
#include <vector>

#include <gtest/gtest.h>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "softsurv/distributions.hpp"
#include "support.hpp"

using namespace softsurv;
using testing_support::ks_pvalue;

namespace {

std::vector<double> draws(int n, auto&& gen) {
  std::vector<double> v(n);
  for (auto& x : v) x = gen();
  return v;
}

// Upper-tail normal probability, accurate far into the tail.
double upper_tail(double x) { return 0.5 * boost::math::erfc(x / std::sqrt(2.0)); }

}  // namespace

TEST(Normal, KolmogorovSmirnov) {
  RngStream r(11);
  const auto xs = draws(100000, [&] { return sample_normal(r); });
  const boost::math::normal_distribution<> nd;
  EXPECT_GT(ks_pvalue(xs, [&](double x) { return boost::math::cdf(nd, x); }), 1e-3);
}

TEST(Exponential, KolmogorovSmirnov) {
  RngStream r(12);
  const auto xs = draws(100000, [&] { return sample_exponential(r); });
  EXPECT_GT(ks_pvalue(xs, [](double x) { return -std::expm1(-x); }), 1e-3);
}

TEST(TruncatedNormal, HalfNormalMean) {
  RngStream r(13);
  const auto xs = draws(1000000, [&] { return sample_truncated_normal(0.0, TruncationSide::Positive, r); });
  EXPECT_NEAR(testing_support::mean(xs), std::sqrt(2.0 / M_PI), 0.003);
}

TEST(TruncatedNormal, SupportRespected) {
  RngStream r(14);
  for (int i = 0; i < 100000; ++i) {
    ASSERT_LT(sample_truncated_normal(5.0, TruncationSide::Negative, r), 0.0);
    ASSERT_GT(sample_truncated_normal(-5.0, TruncationSide::Positive, r), 0.0);
  }
}

TEST(TruncatedNormal, MeanMatchesQuadrature) {
  // (-1, positive): mean of N(-1, 1) restricted to (0, inf).
  const double m = -1.0;
  auto density = [&](double x) { return std::exp(-0.5 * (x - m) * (x - m)); };
  const double mass = testing_support::simpson(density, 0.0, 12.0, 20000);
  const double first = testing_support::simpson([&](double x) { return x * density(x); }, 0.0, 12.0, 20000);
  RngStream r(15);
  const auto xs = draws(1000000, [&] { return sample_truncated_normal(m, TruncationSide::Positive, r); });
  EXPECT_NEAR(testing_support::mean(xs), first / mass, 0.01);
}

TEST(TruncatedNormal, KolmogorovSmirnovBothSides) {
  RngStream r(16);
  for (double m : {-10.0, -3.0, -0.4, 0.0, 0.4, 3.0, 10.0}) {
    const auto pos = draws(100000, [&] { return sample_truncated_normal(m, TruncationSide::Positive, r); });
    const double tail = upper_tail(-m);
    EXPECT_GT(ks_pvalue(pos, [&](double x) { return (tail - upper_tail(x - m)) / tail; }), 1e-3) << m;
    const auto neg = draws(100000, [&] { return sample_truncated_normal(m, TruncationSide::Negative, r); });
    const double below = upper_tail(m);  // P(N(m,1) < 0)
    EXPECT_GT(ks_pvalue(neg, [&](double x) { return upper_tail(m - x) / below; }), 1e-3) << m;
  }
}

TEST(TruncatedNormal, FarTailStaysFast) {
  RngStream r(17);
  // Mean of a standard normal above a is phi(a) / Q(a).
  const double a = 30.0;
  const double expected = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI) / upper_tail(a);
  const auto neg = draws(100000, [&] { return sample_truncated_normal(a, TruncationSide::Negative, r); });
  for (double x : neg) ASSERT_LT(x, 0.0);
  EXPECT_NEAR(a - testing_support::mean(neg), expected, 0.01);
  const auto pos = draws(100000, [&] { return sample_truncated_normal(-a, TruncationSide::Positive, r); });
  EXPECT_NEAR(testing_support::mean(pos) + a, expected, 0.01);
}

TEST(Gamma, Moments) {
  RngStream r(18);
  const auto unit = draws(1000000, [&] { return sample_gamma(4.0, 4.0, r); });
  EXPECT_NEAR(testing_support::mean(unit), 1.0, 0.01);
  const auto g97 = draws(1000000, [&] { return sample_gamma(9.0, 7.0, r); });
  EXPECT_NEAR(testing_support::mean(g97), 9.0 / 7.0, 0.01);
  EXPECT_NEAR(testing_support::variance(g97), 9.0 / 49.0, 0.005);
  const double lambda = 2.5;
  const auto ex = draws(1000000, [&] { return sample_gamma(1.0, lambda, r); });
  double above = 0.0;
  for (double x : ex) above += x > 1.0 / lambda;
  EXPECT_NEAR(above / ex.size(), std::exp(-1.0), 0.01);
}

TEST(Gamma, KolmogorovSmirnov) {
  RngStream r(19);
  for (double shape : {0.05, 0.3, 1.0, 2.5, 14.57, 400.0}) {
    for (double rate : {0.01, 1.0, 6.0}) {
      const auto xs = draws(100000, [&] { return sample_gamma(shape, rate, r); });
      const boost::math::gamma_distribution<> gd(shape, 1.0 / rate);
      EXPECT_GT(ks_pvalue(xs, [&](double x) { return boost::math::cdf(gd, x); }), 1e-3) << shape << ' ' << rate;
    }
  }
}

TEST(Gamma, RejectsBadParameters) {
  RngStream r(20);
  EXPECT_THROW(sample_gamma(0.0, 1.0, r), std::domain_error);
  EXPECT_THROW(sample_gamma(1.0, -1.0, r), std::domain_error);
  EXPECT_THROW(sample_gamma(NAN, 1.0, r), std::domain_error);
}

TEST(Poisson, MomentsAndDegenerate) {
  RngStream r(21);
  EXPECT_EQ(sample_poisson(0.0, r), 0u);
  const auto xs = draws(1000000, [&] { return static_cast<double>(sample_poisson(3.5, r)); });
  EXPECT_NEAR(testing_support::mean(xs), 3.5, 0.01);
  EXPECT_NEAR(testing_support::variance(xs), 3.5, 0.02);
  EXPECT_THROW(sample_poisson(-1.0, r), std::domain_error);
  EXPECT_THROW(sample_poisson(INFINITY, r), std::domain_error);
}

TEST(Poisson, ChiSquareAgainstPmf) {
  RngStream r(22);
  for (double mean : {0.2, 3.5, 9.99, 10.0, 37.0, 1234.5}) {
    const int n = 200000;
    const boost::math::poisson_distribution<> pd(mean);
    // Cells: k <= lo, lo < k < hi one by one, k >= hi.
    const auto lo = static_cast<long>(std::max(0.0, std::floor(mean - 4 * std::sqrt(mean))));
    const auto hi = static_cast<long>(std::ceil(mean + 4 * std::sqrt(mean))) + 2;
    std::vector<double> observed(hi - lo + 1, 0.0);
    for (int i = 0; i < n; ++i) {
      const auto k = std::clamp(static_cast<long>(sample_poisson(mean, r)), lo, hi);
      observed[k - lo] += 1.0;
    }
    std::vector<double> expected(hi - lo + 1);
    for (long k = lo; k <= hi; ++k) {
      double p = boost::math::pdf(pd, static_cast<double>(k));
      if (k == lo) p = boost::math::cdf(pd, static_cast<double>(lo));
      if (k == hi) p = boost::math::cdf(boost::math::complement(pd, static_cast<double>(hi - 1)));
      expected[k - lo] = n * p;
    }
    // Pool neighbouring cells until every expected count is at least 5.
    double chi2 = 0.0, obs = 0.0, exp_acc = 0.0;
    int cells = 0;
    for (std::size_t c = 0; c < expected.size(); ++c) {
      obs += observed[c];
      exp_acc += expected[c];
      if (exp_acc >= 5.0 || c + 1 == expected.size()) {
        chi2 += (obs - exp_acc) * (obs - exp_acc) / exp_acc;
        obs = exp_acc = 0.0;
        ++cells;
      }
    }
    ASSERT_GT(cells, 1);
    // Upper 0.1% point of chi-square(cells - 1) by Wilson-Hilferty.
    const double df = cells - 1;
    const double crit = df * std::pow(1.0 - 2.0 / (9 * df) + 3.09 * std::sqrt(2.0 / (9 * df)), 3);
    EXPECT_LT(chi2, crit) << mean;
  }
}

TEST(PoissonPositive, MatchesTruncatedPmf) {
  RngStream r(23);
  for (double mean : {1e-6, 0.05, 0.7, 1.0, 2.3, 15.0}) {
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto k = sample_poisson_positive(mean, r);
      ASSERT_GE(k, 1u);
      sum += static_cast<double>(k);
    }
    const double expected = mean / -std::expm1(-mean);
    const double var = (mean + mean * mean) / -std::expm1(-mean) - expected * expected;
    EXPECT_NEAR(sum / n, expected, 5.0 * std::sqrt(std::max(var, 1e-12) / n) + 1e-9) << mean;
  }
}
