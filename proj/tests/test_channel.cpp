// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "pasmimo/channel.hpp"

using namespace pasmimo;

TEST(Correlation, ZeroBetaIsIdentity) {
  for (int n = 1; n <= 8; ++n) EXPECT_TRUE(correlation_matrix(n, 0.0).isIdentity(0.0));
}

TEST(Correlation, FourAntennaAdjacentCoefficient) {
  const auto r = correlation_matrix(4, 0.3874);
  for (int i = 0; i + 1 < 4; ++i) EXPECT_NEAR(r(i, i + 1), 0.8999947113066586, 1e-12);
  EXPECT_NEAR(r(0, 3), 0.3874, 1e-15);
  EXPECT_TRUE(r.isApprox(r.transpose()));
}

TEST(Correlation, RejectsOutOfRangeBeta) {
  EXPECT_THROW(correlation_matrix(2, 1.0), std::invalid_argument);
  EXPECT_THROW(correlation_matrix(2, -0.1), std::invalid_argument);
}

TEST(Correlation, PsdAndSquareRoot) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> beta(0.0, 0.999);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const auto r = correlation_matrix(n, beta(rng));
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(r);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
    const auto s = psd_sqrt(r);
    EXPECT_LT((s * s - r).norm(), 1e-9);
  }
}

TEST(Channel, UnitAveragePower) {
  const CorrelatedRayleigh model(4, 4, {0.3874, 0.3874});
  Rng rng = make_rng(11, {0});
  double total = 0.0;
  const int draws = 25000;
  for (int t = 0; t < draws; ++t) total += model.draw(rng).squaredNorm();
  EXPECT_NEAR(total / (draws * 16.0), 1.0, 0.01);
}

TEST(Channel, ReceiveCovarianceMatchesModel) {
  const int rx = 4, tx = 2;
  const CorrelatedRayleigh model(tx, rx, {0.0, 0.3874});
  Rng rng = make_rng(2, {5});
  CMatrix cov = CMatrix::Zero(rx, rx);
  const int draws = 50000;
  for (int t = 0; t < draws; ++t) {
    const CMatrix h = model.draw(rng);
    cov += h * h.adjoint();
  }
  cov /= static_cast<double>(draws * tx);
  const CMatrix expected = correlation_matrix(rx, 0.3874).cast<cplx>();
  EXPECT_LT((cov - expected).norm() / expected.norm(), 0.02);
}

TEST(Channel, DeterministicForSeed) {
  const CorrelatedRayleigh model(3, 3, {0.2, 0.5});
  Rng a = make_rng(99, {1, 2, 3});
  Rng b = make_rng(99, {1, 2, 3});
  Rng c = make_rng(99, {1, 2, 4});
  const CMatrix ha = model.draw(a);
  EXPECT_EQ(ha, model.draw(b));
  EXPECT_NE(ha, model.draw(c));
}

TEST(Transmit, NoiselessIsExact) {
  Rng rng = make_rng(1, {});
  const CMatrix h = draw_channel(rng, 2, 3, {});
  CVector s(2);
  s << cplx(0.3, -0.1), cplx(-1.0, 0.7);
  EXPECT_EQ(transmit(rng, h, s, 0.0), h * s);
  EXPECT_THROW(transmit(rng, h, CVector::Zero(3), 0.1), std::invalid_argument);
}

TEST(Transmit, NoiseVariance) {
  Rng rng = make_rng(4, {});
  const CMatrix h = CMatrix::Zero(2, 2);
  const double sigma2 = 0.37;
  double re = 0.0, im = 0.0;
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) {
    const CVector y = transmit(rng, h, CVector::Zero(2), sigma2);
    for (int i = 0; i < 2; ++i) {
      re += y(i).real() * y(i).real();
      im += y(i).imag() * y(i).imag();
    }
  }
  EXPECT_NEAR(re / (2 * draws), sigma2 / 2, 0.01 * sigma2);
  EXPECT_NEAR(im / (2 * draws), sigma2 / 2, 0.01 * sigma2);
}

TEST(Snr, Convention) {
  EXPECT_NEAR(sigma2_from_snr_db(10.0, 2), 0.05, 1e-15);
  for (double snr : {-3.0, 0.0, 12.5}) EXPECT_NEAR(snr_db_from_sigma2(sigma2_from_snr_db(snr, 4), 4), snr, 1e-12);
}
