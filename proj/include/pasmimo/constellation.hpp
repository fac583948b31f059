// SPDX-License-Identifier: Apache-2.0
//
// PAM/QAM alphabets with Gray labels and Maxwell-Boltzmann shaping.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pasmimo {

using cplx = std::complex<double>;

inline constexpr std::uint32_t gray_encode(std::uint32_t v) { return v ^ (v >> 1); }

inline constexpr std::uint32_t gray_decode(std::uint32_t g) {
  std::uint32_t v = 0;
  for (; g != 0; g >>= 1) v ^= g;
  return v;
}

/// Bit `b` of a `width`-bit label, bit 0 being the most significant.
inline constexpr int label_bit(std::uint32_t label, int width, int b) {
  return static_cast<int>((label >> (width - 1 - b)) & 1u);
}

/// Real 2^M-PAM alphabet {-(2^M-1), ..., -1, +1, ..., 2^M-1} in ascending order.
///
/// Label bit 0 is the sign (0 = positive); bits 1..M-1 are the binary-reflected
/// Gray code of the amplitude index, where amplitude 2i+1 has index i.
struct PamAlphabet {
  int bits = 0;
  std::vector<int> points;
  std::vector<std::uint32_t> labels;

  [[nodiscard]] int size() const { return static_cast<int>(points.size()); }
  [[nodiscard]] int amplitude_count() const { return size() / 2; }

  [[nodiscard]] std::uint32_t label_of(int sign_bit, int amp_index) const {
    return (static_cast<std::uint32_t>(sign_bit) << (bits - 1)) |
           gray_encode(static_cast<std::uint32_t>(amp_index));
  }

  /// Index into `points` of the value with the given sign bit and amplitude index.
  [[nodiscard]] int point_index(int sign_bit, int amp_index) const {
    const int half = amplitude_count();
    return sign_bit == 0 ? half + amp_index : half - 1 - amp_index;
  }
};

inline PamAlphabet build_pam(int bits) {
  if (bits < 1 || bits > 6) {
    throw std::invalid_argument("build_pam: bits per dimension must be in [1, 6], got " +
                                std::to_string(bits));
  }
  PamAlphabet pam;
  pam.bits = bits;
  const int n = 1 << bits;
  const int half = n / 2;
  pam.points.resize(n);
  pam.labels.resize(n);
  for (int k = 0; k < n; ++k) {
    const int amp_index = k < half ? half - 1 - k : k - half;
    const int sign = k < half ? 1 : 0;
    pam.points[k] = (sign ? -1 : 1) * (2 * amp_index + 1);
    pam.labels[k] = pam.label_of(sign, amp_index);
  }
  return pam;
}

/// Maxwell-Boltzmann law P(x) = Z exp(-nu x^2) over the amplitudes {1, 3, ..., 2^M-1}.
struct MbDistribution {
  double nu = 0.0;
  std::vector<double> probs;
  double z = 1.0;

  [[nodiscard]] double mean_square() const {
    double e = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double a = 2.0 * static_cast<double>(i) + 1.0;
      e += probs[i] * a * a;
    }
    return e;
  }

  /// Entropy in bits per amplitude.
  [[nodiscard]] double entropy() const {
    double h = 0.0;
    for (double p : probs) {
      if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
  }
};

inline MbDistribution mb_distribution(double nu, int bits) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw std::invalid_argument("mb_distribution: nu must be a finite nonnegative value");
  }
  if (bits < 1 || bits > 6) {
    throw std::invalid_argument("mb_distribution: bits per dimension must be in [1, 6]");
  }
  MbDistribution dist;
  dist.nu = nu;
  const int count = 1 << (bits - 1);
  dist.probs.resize(count);
  // Weights relative to amplitude 1 keep large nu from underflowing everything.
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * i + 1.0;
    dist.probs[i] = std::exp(-nu * (a * a - 1.0));
    total += dist.probs[i];
  }
  for (double& p : dist.probs) p /= total;
  dist.z = std::exp(nu) / total;
  return dist;
}

/// Finds nu whose MB entropy equals `target_bits` (bits per amplitude) by bisection on [0, 10].
inline double nu_for_rate(double target_bits, int bits) {
  const double max_entropy = static_cast<double>(bits - 1);
  if (!(target_bits > 0.0) || !(target_bits < max_entropy)) {
    throw std::invalid_argument("nu_for_rate: target must lie in (0, M-1)");
  }
  double lo = 0.0;
  double hi = 10.0;
  if (mb_distribution(hi, bits).entropy() > target_bits) {
    throw std::invalid_argument("nu_for_rate: target entropy not reachable with nu <= 10");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = mb_distribution(mid, bits).entropy();
    if (std::abs(h - target_bits) <= 1e-9) return mid;
    if (h > target_bits) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

/// delta = 1/sqrt(2 E[a^2]), giving unit mean energy for the complex product constellation.
inline double scale_factor(const MbDistribution& dist) { return 1.0 / std::sqrt(2.0 * dist.mean_square()); }

/// Square 2^{2M}-QAM built as the product of two identically shaped PAMs, scaled
/// to unit mean energy under its prior.
///
/// QAM point q = re_k * P + im_k (P = 2^M, k indexes `pam.points`) carries the
/// 2M-bit label (re_label << M) | im_label.
struct ShapedConstellation {
  PamAlphabet pam;
  MbDistribution dist;
  double delta = 1.0;
  double nu_scaled = 0.0;

  std::vector<cplx> points;
  std::vector<std::uint32_t> labels;
  /// nu_scaled * |s|^2, the negative log prior up to a constant.
  std::vector<double> prior_cost;
  /// P(s) for each QAM point.
  std::vector<double> prob;

  [[nodiscard]] int bits_per_dim() const { return pam.bits; }
  [[nodiscard]] int bits_per_symbol() const { return 2 * pam.bits; }
  [[nodiscard]] int size() const { return static_cast<int>(points.size()); }
  [[nodiscard]] int pam_size() const { return pam.size(); }
  [[nodiscard]] bool shaped() const { return nu_scaled != 0.0; }

  [[nodiscard]] int bit(int q, int b) const { return label_bit(labels[q], bits_per_symbol(), b); }

  /// Scaled PAM value for the given index into `pam.points`.
  [[nodiscard]] double pam_value(int k) const { return delta * pam.points[k]; }

  [[nodiscard]] int qam_index(int re_k, int im_k) const { return re_k * pam_size() + im_k; }

  [[nodiscard]] double mean_energy() const {
    double e = 0.0;
    for (int q = 0; q < size(); ++q) e += prob[q] * std::norm(points[q]);
    return e;
  }
};

inline ShapedConstellation make_constellation(int bits, double nu) {
  ShapedConstellation c;
  c.pam = build_pam(bits);
  c.dist = mb_distribution(nu, bits);
  c.delta = scale_factor(c.dist);
  c.nu_scaled = nu / (c.delta * c.delta);

  const int n = c.pam.size();
  const int half = n / 2;
  std::vector<double> pam_prob(n);
  for (int k = 0; k < n; ++k) {
    const int amp_index = k < half ? half - 1 - k : k - half;
    pam_prob[k] = 0.5 * c.dist.probs[amp_index];
  }
  c.points.resize(n * n);
  c.labels.resize(n * n);
  c.prior_cost.resize(n * n);
  c.prob.resize(n * n);
  for (int kr = 0; kr < n; ++kr) {
    for (int ki = 0; ki < n; ++ki) {
      const int q = c.qam_index(kr, ki);
      c.points[q] = cplx(c.pam_value(kr), c.pam_value(ki));
      c.labels[q] = (c.pam.labels[kr] << bits) | c.pam.labels[ki];
      c.prior_cost[q] = c.nu_scaled * std::norm(c.points[q]);
      c.prob[q] = pam_prob[kr] * pam_prob[ki];
    }
  }
  return c;
}

inline ShapedConstellation make_uniform_constellation(int bits) { return make_constellation(bits, 0.0); }

}  // namespace pasmimo
