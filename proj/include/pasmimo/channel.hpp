// SPDX-License-Identifier: Apache-2.0
//
// Block-fading Kronecker-correlated Rayleigh MIMO channel with complex AWGN.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

#include "pasmimo/constellation.hpp"

namespace pasmimo {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for (seed, stream ids...).
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t s : stream) h = splitmix64(h ^ splitmix64(s + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline cplx complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * variance));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

/// R_ij = beta^(((i-j)/(n-1))^2).
inline RMatrix correlation_matrix(int n, double beta) {
  if (n < 1) throw std::invalid_argument("correlation_matrix: size must be >= 1");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("correlation_matrix: beta must lie in [0, 1)");
  RMatrix r = RMatrix::Identity(n, n);
  if (n == 1) return r;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double e = static_cast<double>(i - j) / (n - 1);
      r(i, j) = beta == 0.0 ? 0.0 : std::pow(beta, e * e);
    }
  }
  return r;
}

/// Symmetric PSD square root via eigendecomposition; tiny negative eigenvalues are clamped.
inline RMatrix psd_sqrt(const RMatrix& r) {
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(r);
  const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

struct CorrelationConfig {
  double beta_tx = 0.0;
  double beta_rx = 0.0;
};

/// Precomputed Kronecker factors for repeated draws.
class CorrelatedRayleigh {
 public:
  CorrelatedRayleigh(int tx, int rx, const CorrelationConfig& corr)
      : tx_(tx),
        rx_(rx),
        sqrt_tx_(psd_sqrt(correlation_matrix(tx, corr.beta_tx))),
        sqrt_rx_(psd_sqrt(correlation_matrix(rx, corr.beta_rx))),
        identity_(corr.beta_tx == 0.0 && corr.beta_rx == 0.0) {}

  /// H = R_rx^{1/2} W R_tx^{1/2}, W i.i.d. CN(0, 1); shape rx x tx.
  [[nodiscard]] CMatrix draw(Rng& rng) const {
    CMatrix w(rx_, tx_);
    for (int c = 0; c < tx_; ++c) {
      for (int r = 0; r < rx_; ++r) w(r, c) = complex_gaussian(rng, 1.0);
    }
    if (identity_) return w;
    return sqrt_rx_.cast<cplx>() * w * sqrt_tx_.cast<cplx>();
  }

 private:
  int tx_;
  int rx_;
  RMatrix sqrt_tx_;
  RMatrix sqrt_rx_;
  bool identity_;
};

inline CMatrix draw_channel(Rng& rng, int tx, int rx, const CorrelationConfig& corr) {
  return CorrelatedRayleigh(tx, rx, corr).draw(rng);
}

/// y = H s + n with n ~ CN(0, sigma2 I).
inline CVector transmit(Rng& rng, const CMatrix& h, const CVector& s, double sigma2) {
  if (h.cols() != s.size()) {
    throw std::invalid_argument("transmit: H has " + std::to_string(h.cols()) + " columns but s has " +
                                std::to_string(s.size()) + " entries");
  }
  if (sigma2 < 0.0) throw std::invalid_argument("transmit: negative noise variance");
  CVector y = h * s;
  if (sigma2 > 0.0) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += complex_gaussian(rng, sigma2);
  }
  return y;
}

/// SNR(dB) = -10 log10(sigma2 * M_t) for unit-energy per-layer symbols.
inline double sigma2_from_snr_db(double snr_db, int tx) { return std::pow(10.0, -snr_db / 10.0) / tx; }

inline double snr_db_from_sigma2(double sigma2, int tx) { return -10.0 * std::log10(sigma2 * tx); }

}  // namespace pasmimo
