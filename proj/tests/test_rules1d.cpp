#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <thread>

#include "stpq/normal.hpp"
#include "stpq/rules1d.hpp"

using namespace stpq;

namespace {

// closed-form moment of x^k against the domain's weight
double moment(WeightedInterval domain, int k) {
  switch (domain) {
    case WeightedInterval::unit_interval:
      return 1.0 / (k + 1);
    case WeightedInterval::symmetric_interval:
      return k % 2 ? 0.0 : 2.0 / (k + 1);
    case WeightedInterval::half_line:
      return boost::math::factorial<double>(k);
    case WeightedInterval::real_line:
      return k % 2 ? 0.0 : boost::math::tgamma(0.5 * (k + 1));
  }
  return 0.0;
}

double rule_moment(const Rule1D<double>& r, int k) {
  return r.integrate([k](double x) { return std::pow(x, k); });
}

}  // namespace

TEST(GaussRule, RealLineSingleNode) {
  const auto r = gauss_rule(WeightedInterval::real_line, 1);
  ASSERT_EQ(r.size(), 1);
  EXPECT_EQ(r.nodes(0), 0.0);
  EXPECT_NEAR(r.weights(0), std::sqrt(std::numbers::pi), 1e-15);
}

TEST(GaussRule, HalfLineSingleNode) {
  const auto r = gauss_rule(WeightedInterval::half_line, 1);
  EXPECT_NEAR(r.nodes(0), 1.0, 1e-15);
  EXPECT_NEAR(r.weights(0), 1.0, 1e-15);
}

TEST(GaussRule, TwoPointLegendre) {
  const auto r = gauss_rule(WeightedInterval::symmetric_interval, 2);
  EXPECT_NEAR(r.nodes(0), -1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.nodes(1), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.weights(0), 1.0, 1e-15);
  EXPECT_NEAR(r.weights(1), 1.0, 1e-15);
  EXPECT_EQ(r.order, 3);
  EXPECT_FALSE(r.nested);
}

TEST(GaussRule, MatchesBoostLegendreTable) {
  using table = boost::math::quadrature::gauss<double, 20>;
  const auto r = gauss_rule(WeightedInterval::symmetric_interval, 20);
  const auto& x = table::abscissa();
  const auto& w = table::weights();
  // boost lists the nonnegative half, largest index last
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(r.nodes(10 + i), x[i], 2e-15);
    EXPECT_NEAR(r.weights(10 + i), w[i], 2e-15);
    EXPECT_NEAR(r.nodes(9 - i), -x[i], 2e-15);
  }
}

TEST(GaussRule, RejectsZeroNodes) { EXPECT_THROW(gauss_rule(WeightedInterval::half_line, 0), std::invalid_argument); }

class GaussExactness : public ::testing::TestWithParam<WeightedInterval> {};

TEST_P(GaussExactness, MomentsUpToOrder) {
  const WeightedInterval domain = GetParam();
  for (int n : {1, 2, 3, 5, 8, 13, 21, 30}) {
    const auto r = gauss_rule(domain, n);
    ASSERT_EQ(r.order, 2 * n - 1);
    EXPECT_NEAR(r.weights.sum(), total_mass(domain), 1e-12 * total_mass(domain));
    EXPECT_TRUE((r.weights.array() > 0).all()) << "n=" << n;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      EXPECT_TRUE(contains(domain, r.nodes(i)));
      if (i) EXPECT_LT(r.nodes(i - 1), r.nodes(i));
    }
    for (int k = 0; k <= r.order; ++k) {
      const double exact = moment(domain, k);
      // odd moments vanish: compare against the even neighbour's scale
      const double scale = exact != 0.0 ? std::abs(exact) : std::abs(moment(domain, k + 1)) + 1.0;
      EXPECT_NEAR(rule_moment(r, k), exact, 1e-10 * scale) << to_string(domain) << " n=" << n << " k=" << k;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Domains, GaussExactness,
                         ::testing::Values(WeightedInterval::unit_interval, WeightedInterval::symmetric_interval,
                                           WeightedInterval::half_line, WeightedInterval::real_line));

TEST(ClenshawCurtis, LevelOne) {
  const auto r = clenshaw_curtis(1);
  ASSERT_EQ(r.size(), 3);
  EXPECT_EQ(r.nodes(0), -1.0);
  EXPECT_EQ(r.nodes(1), 0.0);
  EXPECT_EQ(r.nodes(2), 1.0);
  EXPECT_NEAR(r.weights(0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.weights(1), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.weights(2), 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(r.nested);
}

TEST(ClenshawCurtis, LevelZeroIsMidpoint) {
  const auto r = clenshaw_curtis(0);
  ASSERT_EQ(r.size(), 1);
  EXPECT_EQ(r.nodes(0), 0.0);
  EXPECT_EQ(r.weights(0), 2.0);
}

TEST(ClenshawCurtis, NestedExactly) {
  for (int l = 0; l < 10; ++l) {
    const auto a = clenshaw_curtis(l), b = clenshaw_curtis(l + 1);
    const std::set<double> fine(b.nodes.data(), b.nodes.data() + b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_TRUE(fine.count(a.nodes(i))) << "l=" << l << " x=" << a.nodes(i);
  }
}

TEST(ClenshawCurtis, ExactnessAndMass) {
  for (int l = 0; l <= 6; ++l) {
    const auto r = clenshaw_curtis(l);
    EXPECT_NEAR(r.weights.sum(), 2.0, 1e-12);
    EXPECT_EQ(r.size(), RuleFamily1D::size_at_level(l));
    for (int k = 0; k <= std::min(r.order, 30); ++k)
      EXPECT_NEAR(rule_moment(r, k), moment(WeightedInterval::symmetric_interval, k), 1e-12) << "l=" << l << " k=" << k;
  }
  EXPECT_THROW(clenshaw_curtis(-1), std::invalid_argument);
}

TEST(GeneralizedGauss, NegLogSingleNode) {
  const auto r = generalized_gauss(Psi::neg_log1m, 1);
  ASSERT_EQ(r.size(), 1);
  EXPECT_NEAR(r.nodes(0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(r.weights(0), 1.0, 1e-15);
}

TEST(GeneralizedGauss, NegLogFifthMoment) {
  const auto r = generalized_gauss(Psi::neg_log1m, 3);
  const double got = r.integrate([](double x) { return std::pow(-std::log1p(-x), 5); });
  EXPECT_NEAR(got, 120.0, 1e-9);
}

TEST(GeneralizedGauss, WeightsSumToOne) {
  for (Psi psi : {Psi::neg_log1m, Psi::arcsinh_atanh, Psi::inv_erf})
    for (int n : {1, 2, 5, 17, 33, 64, 129}) {
      const auto r = generalized_gauss(psi, n);
      EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12) << to_string(psi) << " n=" << n;
      EXPECT_TRUE((r.weights.array() > 0).all());
      EXPECT_TRUE((r.nodes.array() > 0).all() && (r.nodes.array() <= 1).all());
    }
}

TEST(GeneralizedGauss, PsiMomentsNegLog) {
  // int_0^1 (-log(1-x))^k dx = k!
  for (int n : {2, 6, 12}) {
    const auto r = generalized_gauss_psi_nodes(Psi::neg_log1m, n);
    for (int k = 0; k <= 2 * n - 1; ++k)
      EXPECT_NEAR(rule_moment(r, k) / boost::math::factorial<double>(k), 1.0, 1e-10) << "n=" << n << " k=" << k;
  }
}

TEST(GeneralizedGauss, PsiMomentsInvErf) {
  // y = erfinv(2x-1) is N(0, 1/2): E y^{2j} = (2j-1)!! / 2^j
  for (int n : {2, 7, 15, 30}) {
    const auto r = generalized_gauss_psi_nodes(Psi::inv_erf, n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      const double exact = k % 2 ? 0.0 : boost::math::double_factorial<double>(std::max(k - 1, 0)) / std::pow(2.0, k / 2);
      const double scale = k % 2 ? boost::math::double_factorial<double>(k) / std::pow(2.0, (k + 1) / 2) : exact;
      EXPECT_NEAR(rule_moment(r, k), exact, 1e-10 * scale) << "n=" << n << " k=" << k;
    }
  }
}

TEST(GeneralizedGauss, PsiMomentsArcsinh) {
  // moments of asinh(2 atanh(2x-1)/pi) on [0,1], frozen from a 30-digit quadrature
  const double m2 = 0.256934905052716434, m10 = 0.781612360037468479;
  for (int n : {6, 12, 30}) {
    const auto r = generalized_gauss_psi_nodes(Psi::arcsinh_atanh, n);
    EXPECT_NEAR(rule_moment(r, 2), m2, 1e-13);
    EXPECT_NEAR(rule_moment(r, 10), m10, 1e-12);
    EXPECT_NEAR(rule_moment(r, 7), 0.0, 1e-14);
  }
}

TEST(GeneralizedGauss, PsiRoundTrip) {
  for (Psi psi : {Psi::neg_log1m, Psi::arcsinh_atanh, Psi::inv_erf})
    for (double x : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999})
      EXPECT_NEAR(psi_inverse(psi, psi_value(psi, x)), x, 1e-13) << to_string(psi);
}

TEST(GeneralizedGauss, SymmetricPsiGivesMirroredNodes) {
  for (Psi psi : {Psi::arcsinh_atanh, Psi::inv_erf}) {
    const auto r = generalized_gauss(psi, 9);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      EXPECT_NEAR(r.nodes(i) + r.nodes(r.size() - 1 - i), 1.0, 1e-16);
      EXPECT_EQ(r.weights(i), r.weights(r.size() - 1 - i));
    }
  }
}

TEST(GeneralizedGauss, TooManyNodesReportsCount) {
  try {
    generalized_gauss(Psi::neg_log1m, kMaxGeneralizedGaussNodes + 1);
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find(std::to_string(kMaxGeneralizedGaussNodes + 1)), std::string::npos);
  }
}

TEST(Stieltjes, RecoversLegendre) {
  // 40-point Gauss-Legendre on [-1,1] as a discrete measure: its first 20
  // coefficients are the continuous ones
  const auto g = gauss_rule<long double>(WeightedInterval::symmetric_interval, 40);
  std::vector<long double> x(g.nodes.data(), g.nodes.data() + 40), w(g.weights.data(), g.weights.data() + 40);
  const auto rec = stieltjes(x, w, 20);
  const auto ref = classical_recurrence<long double>(WeightedInterval::symmetric_interval, 20);
  for (int k = 0; k < 20; ++k) {
    EXPECT_NEAR(double(rec.alpha(k)), 0.0, 1e-15);
    if (k) EXPECT_NEAR(double(rec.beta(k)), double(ref.beta(k)), 1e-15);
  }
}

TEST(Stieltjes, BreakdownNamesSize) {
  // two distinct support points carry at most two orthogonal polynomials
  std::vector<long double> x = {0.0L, 1.0L, 1.0L}, w = {0.5L, 0.25L, 0.25L};
  EXPECT_THROW(stieltjes(x, w, 4), std::invalid_argument);
  try {
    stieltjes(x, w, 3);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("n="), std::string::npos) << e.what();
  }
}

TEST(Normal, Examples) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  EXPECT_EQ(normal_icdf(0.5), 0.0);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_THROW(normal_icdf(0.0), std::domain_error);
  EXPECT_THROW(normal_icdf(1.0), std::domain_error);
}

TEST(Normal, AgainstBoost) {
  const boost::math::normal nd;
  for (double x = -8.0; x <= 8.0; x += 0.125) {
    EXPECT_NEAR(normal_cdf(x), boost::math::cdf(nd, x), 1e-14);
  }
  for (double p : {1e-300, 1e-20, 1e-10, 1e-4, 0.02425, 0.1, 0.3, 0.5, 0.6, 0.9, 0.97575, 0.99, 1 - 1e-12}) {
    const double ref = boost::math::quantile(nd, p);
    EXPECT_NEAR(normal_icdf(p), ref, 1e-12 * std::max(1.0, std::abs(ref))) << "p=" << p;
  }
}

TEST(Normal, InverseOfCdf) {
  for (double x = -6.0; x <= 6.0; x += 1.0 / 64) {
    const double phi = normal_cdf(x);
    // near x = +6 the cdf itself is only resolved to one ulp of 1
    const double ulp_limit = 2.0 * (std::nextafter(phi, 2.0) - phi) / normal_pdf(x);
    EXPECT_NEAR(normal_icdf(phi), x, std::max(1e-9, ulp_limit)) << "x=" << x;
  }
}

TEST(RuleFamily, ScheduleAndCaching) {
  EXPECT_EQ(RuleFamily1D::size_at_level(0), 1);
  EXPECT_EQ(RuleFamily1D::size_at_level(1), 3);
  EXPECT_EQ(RuleFamily1D::size_at_level(5), 33);
  const auto fam = RuleFamily1D::gauss(WeightedInterval::half_line);
  EXPECT_FALSE(fam.nested());
  EXPECT_TRUE(RuleFamily1D::clenshaw_curtis().nested());
  const auto& a = fam.rule(3);
  EXPECT_EQ(&a, &fam.rule(3));
  EXPECT_EQ(a.size(), 9);
  EXPECT_EQ(RuleFamily1D::generalized_gauss(Psi::inv_erf).rule(2).size(), 5);
}

TEST(RuleFamily, ConcurrentFirstUse) {
  const auto fam = RuleFamily1D::generalized_gauss(Psi::arcsinh_atanh);
  std::vector<const Rule1D<double>*> seen(8);
  std::vector<std::thread> pool;
  for (int t = 0; t < 8; ++t) pool.emplace_back([&, t] { seen[t] = &fam.rule(5); });
  for (auto& th : pool) th.join();
  for (auto* p : seen) EXPECT_EQ(p, seen[0]);
}
