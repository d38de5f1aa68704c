#include <cmath>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "hdqkd/phys_model.hpp"

using namespace hdqkd;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

// 50-digit reference values.
double big_poisson(int n, const Big& lambda) {
  Big fact = 1;
  for (int k = 2; k <= n; ++k) fact *= k;
  return static_cast<double>(pow(lambda, n) * exp(-lambda) / fact);
}

double big_gamma(int n, const Big& ea, const Big& eb, const Big& et, const Big& pd) {
  const Big one = 1;
  return static_cast<double>((one - pow(one - ea, n) * (one - pd)) *
                             (one - pow(one - eb * et, n) * (one - pd)));
}

double big_series(const Big& lambda, const Big& ea, const Big& eb, const Big& et, const Big& pd) {
  Big sum = 0;
  Big pmf = exp(-lambda);
  const Big one = 1;
  for (int n = 0; n < 400; ++n) {
    sum += pmf * (one - pow(one - ea, n) * (one - pd)) * (one - pow(one - eb * et, n) * (one - pd));
    pmf *= lambda / (n + 1);
  }
  return static_cast<double>(sum);
}

}  // namespace

TEST(Transmittance, Examples) {
  EXPECT_DOUBLE_EQ(transmittance(0.2, 0), 1.0);
  EXPECT_NEAR(transmittance(0.2, 50), 0.1, 1e-16);
  EXPECT_NEAR(transmittance(0.2, 100), 0.01, 1e-17);
  EXPECT_THROW(transmittance(-0.1, 1), DomainError);
  EXPECT_THROW(transmittance(0.2, -1), DomainError);
}

TEST(Transmittance, Multiplicative) {
  for (double a : {0.0, 0.7, 13.0, 55.5}) {
    for (double b : {0.0, 2.5, 40.0, 120.0}) {
      const double lhs = transmittance(0.2, a + b);
      const double rhs = transmittance(0.2, a) * transmittance(0.2, b);
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-14);
    }
  }
}

TEST(PoissonPmf, Examples) {
  EXPECT_DOUBLE_EQ(poisson_pmf(0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(poisson_pmf(3, 0.0), 0.0);
  EXPECT_NEAR(poisson_pmf(0, 0.1), std::exp(-0.1), 1e-16);
  // 0.25^2 e^-0.25 / 2
  EXPECT_NEAR(poisson_pmf(2, 0.25), 0.0243375244709814, 1e-15);
  EXPECT_NEAR(poisson_pmf(2, 0.25), big_poisson(2, Big("0.25")), 1e-17);
  EXPECT_THROW(poisson_pmf(-1, 0.1), DomainError);
  EXPECT_THROW(poisson_pmf(1, -0.1), DomainError);
}

TEST(PoissonPmf, MatchesMultiprecisionAcrossRange) {
  for (int n : {0, 1, 5, 20, 60, 150, 171, 200}) {
    for (const char* l : {"0.01", "0.5", "3", "40", "150"}) {
      const double ref = big_poisson(n, Big(l));
      const double got = poisson_pmf(n, std::stod(l));
      if (ref < 1e-300) continue;
      EXPECT_NEAR(got / ref, 1.0, 1e-11) << "n=" << n << " lambda=" << l;
    }
  }
}

TEST(GammaN, Examples) {
  const double pd = 7e-8;
  EXPECT_NEAR(gamma_n(0, 0.93, 0.93, 1.0, pd), pd * pd, 1e-30);
  EXPECT_NEAR(gamma_n(1, 0.93, 0.93, 0.1, 0.0), 0.08649, 1e-15);
  EXPECT_NEAR(gamma_n(1, 0.93, 0.93, 0.1, 0.0),
              big_gamma(1, Big("0.93"), Big("0.93"), Big("0.1"), Big(0)), 1e-16);
  EXPECT_NEAR(gamma_n(400, 0.93, 0.93, 0.1, 1e-3), 1.0, 1e-15);
  EXPECT_THROW(gamma_n(1, 1.1, 0.9, 1, 0), DomainError);
  EXPECT_THROW(gamma_n(-1, 0.9, 0.9, 1, 0), DomainError);
}

TEST(GammaN, Monotone) {
  double prev = -1;
  for (long n = 0; n < 50; ++n) {
    const double g = gamma_n(n, 0.5, 0.93, 0.05, 1e-6);
    EXPECT_GE(g, prev);
    prev = g;
  }
  for (double eta = 0.0; eta <= 1.0; eta += 0.1) {
    EXPECT_LE(gamma_n(2, eta, 0.5, 0.3, 1e-4), gamma_n(2, std::min(1.0, eta + 0.1), 0.5, 0.3, 1e-4));
    EXPECT_LE(gamma_n(2, 0.5, eta, 0.3, 1e-4), gamma_n(2, 0.5, std::min(1.0, eta + 0.1), 0.3, 1e-4));
  }
  for (double pd : {0.0, 1e-6, 1e-3, 0.1}) {
    EXPECT_LE(gamma_n(3, 0.5, 0.5, 0.3, pd), gamma_n(3, 0.5, 0.5, 0.3, pd * 2 + 1e-9));
  }
}

TEST(PostselectProb, Examples) {
  EXPECT_NEAR(postselect_prob_series(0, 0.93, 0.93, 0.1, 0.01), 1e-4, 1e-18);
  EXPECT_NEAR(postselect_prob_closed(0, 0.93, 0.93, 0.1, 0.01), 1e-4, 1e-18);
  EXPECT_NEAR(postselect_prob_series(0.1, 0.93, 0.93, 0.1, 0.0),
              postselect_prob_closed(0.1, 0.93, 0.93, 0.1, 0.0), 1e-12);
  EXPECT_NEAR(postselect_prob_closed(0.1, 0.93, 0.93, 1.0, 0.0),
              big_series(Big("0.1"), Big("0.93"), Big("0.93"), Big(1), Big(0)), 1e-15);
  EXPECT_NEAR(postselect_prob_closed(0.7, 0.0, 0.0, 0.0, 0.02), 4e-4, 1e-18);
  // eta_A lambda = 30, eta_B eta_T lambda = 15, joint exponent 37.5
  const double p60 = 1 - std::exp(-30.0) - std::exp(-15.0) + std::exp(-37.5);
  EXPECT_NEAR(postselect_prob_closed(60, 0.5, 0.5, 0.5, 0), p60, 1e-15);
  EXPECT_NEAR(postselect_prob_series(60, 0.5, 0.5, 0.5, 0), p60, 1e-13);
}

TEST(PostselectProb, MatchesMultiprecisionSeries) {
  for (const char* l : {"0.001", "0.01", "0.1", "0.25", "1", "4"}) {
    for (const char* et : {"1", "0.01", "1e-10"}) {
      const double ref = big_series(Big(l), Big("0.93"), Big("0.93"), Big(et), Big("7.0642e-8"));
      const double got = postselect_prob_closed(std::stod(l), 0.93, 0.93, std::stod(et), 7.0642e-8);
      EXPECT_NEAR(got / ref, 1.0, 1e-12) << l << " " << et;
    }
  }
}

TEST(PostselectProb, ClosedEqualsSeriesUpToTen) {
  for (double lambda = 0.0; lambda <= 10.0; lambda += 0.37) {
    for (double et : {1.0, 0.3, 1e-3, 1e-12}) {
      for (double pd : {0.0, 1.5e-9, 1e-3}) {
        EXPECT_NEAR(postselect_prob_closed(lambda, 0.5, 0.93, et, pd),
                    postselect_prob_series(lambda, 0.5, 0.93, et, pd), 1e-12);
      }
    }
  }
}

TEST(PostselectProb, MonotoneAndBounded) {
  const double pd = 1e-4;
  double prev = 0;
  for (double lambda = 0.0; lambda <= 5.0; lambda += 0.05) {
    const double p = postselect_prob_closed(lambda, 0.93, 0.93, 0.01, pd);
    EXPECT_GE(p, prev);
    EXPECT_GE(p, pd * pd);
    EXPECT_LE(p, 1.0);
    prev = p;
  }
  EXPECT_NEAR(postselect_prob_closed(0, 0.93, 0.93, 0.01, pd) / gamma_n(0, 0.93, 0.93, 0.01, pd),
              1.0, 1e-14);
}

TEST(PostselectProb, SeriesNonConvergence) {
  EXPECT_THROW(postselect_prob_series(50, 0.5, 0.5, 0.5, 0, 1e-15, 5), ComputationError);
}

TEST(ExcessNoise, Examples) {
  EXPECT_EQ(excess_noise_from_delta(0, 240e-12), 0.0);
  const Big r = Big(1) + Big(1) / 24;
  EXPECT_NEAR(excess_noise_from_delta(10e-12, 240e-12), static_cast<double>(r * r - 1), 1e-15);
  EXPECT_NEAR(excess_noise_from_delta(10e-12, 240e-12), 0.0850694, 1e-7);
  EXPECT_DOUBLE_EQ(excess_noise_from_delta(3e-12, 3e-12), 3.0);
  EXPECT_THROW(excess_noise_from_delta(1e-12, 0), DomainError);
}

TEST(FrameParams, Defaults) {
  PhysicalParams p;
  const auto f = frame_params(p);
  EXPECT_DOUBLE_EQ(f.t_f, 2.0 * std::sqrt(2.0 * std::log(2.0)) * 30e-12);
  EXPECT_DOUBLE_EQ(f.delta_cor, 8 * 30e-12);
  EXPECT_NEAR(f.p_d, 7.0644e-8, 1e-11);
  EXPECT_NEAR(f.zeta, 0.0850694, 1e-7);
  p.schmidt_d = 32;
  EXPECT_NEAR(frame_params(p).zeta, 0.0209418, 1e-7);
  p.r_dc = 1e13;
  EXPECT_EQ(frame_params(p).p_d, 1.0);
}

TEST(PhysicalParams, Validation) {
  PhysicalParams p;
  EXPECT_NO_THROW(p.validate());
  p.eta_alice = 1.2;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.schmidt_d = 1;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.delta_coh = 0;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.alpha = -1;
  EXPECT_THROW(p.validate(), DomainError);
}

TEST(SinglePairFraction, MatchesDefinition) {
  PhysicalParams p;
  const auto f = frame_params(p);
  const auto ch = channel_point(p.alpha, 30);
  const double lambda = 0.1;
  const double g1 = gamma_n(1, p.eta_alice, p.eta_bob, ch.eta_t, f.p_d);
  const double expected = lambda * std::exp(-lambda) * g1 / postselect_prob(lambda, p, f, ch);
  EXPECT_NEAR(single_pair_fraction(lambda, p, f, ch), expected, 1e-15);
  EXPECT_LE(single_pair_fraction(lambda, p, f, ch), 1.0);
}
