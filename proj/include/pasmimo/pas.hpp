// SPDX-License-Identifier: Apache-2.0
//
// Probabilistic amplitude shaping frame assembly on top of a systematic code.
//
// Codeword layout (systematic order):
//   [0, n_amp_bits)                amplitude bits, amplitude-major, Gray bit minor
//   [n_amp_bits, K)                unshaped information sign bits
//   [K, N)                         parity bits
// PAM symbol t takes its sign from parity bit t when t < N-K, otherwise from
// unshaped sign bit t-(N-K). PAM symbols 2q and 2q+1 form the real and
// imaginary parts of QAM symbol q.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pasmimo/ccdm.hpp"
#include "pasmimo/constellation.hpp"
#include "pasmimo/ldpc.hpp"

namespace pasmimo {

struct PasFramePlan {
  int n = 0;
  int k = 0;
  int bits = 0;
  int n_sym = 0;
  int n_amp = 0;
  int n_amp_bits = 0;
  int n_parity_signs = 0;
  int n_unshaped_info_signs = 0;
  /// Absent when shaping is disabled; amplitude bits are then raw data bits.
  std::optional<CcdmSpec> ccdm;

  [[nodiscard]] bool shaped() const { return ccdm.has_value(); }
  [[nodiscard]] int shaped_data_bits() const { return ccdm ? ccdm->k_in : n_amp_bits; }
  [[nodiscard]] int data_bits() const { return shaped_data_bits() + n_unshaped_info_signs; }

  /// Codeword position carrying label bit `b` (0 = sign) of PAM symbol `t`.
  [[nodiscard]] int codeword_position(int t, int b) const {
    if (b == 0) return t < n_parity_signs ? k + t : n_amp_bits + (t - n_parity_signs);
    return t * (bits - 1) + (b - 1);
  }

  /// Reorders detector LLRs (QAM symbol-major, 2M label bits each) into codeword order.
  [[nodiscard]] std::vector<double> to_codeword_order(const std::vector<double>& symbol_llrs) const {
    if (static_cast<int>(symbol_llrs.size()) != n) {
      throw std::invalid_argument("to_codeword_order: expected " + std::to_string(n) + " LLRs");
    }
    std::vector<double> out(n);
    for (int q = 0; q < n_sym; ++q) {
      for (int b = 0; b < 2 * bits; ++b) {
        const int t = 2 * q + b / bits;
        out[codeword_position(t, b % bits)] = symbol_llrs[static_cast<std::size_t>(q) * 2 * bits + b];
      }
    }
    return out;
  }
};

/// Frame plan for an (n, k) code and 2^{2M}-QAM. Pass `dist` to shape the
/// amplitudes through CCDM; omit it to send amplitude bits unshaped.
inline PasFramePlan plan_frame(int n, int k, int bits, const MbDistribution* dist) {
  if (bits < 1) throw std::invalid_argument("plan_frame: bits per dimension must be >= 1");
  if (n <= 0 || k <= 0 || k >= n) throw std::invalid_argument("plan_frame: need 0 < K < N");
  if (n % (2 * bits) != 0) {
    throw std::invalid_argument("plan_frame: N=" + std::to_string(n) + " is not a multiple of 2M=" +
                                std::to_string(2 * bits));
  }
  PasFramePlan p;
  p.n = n;
  p.k = k;
  p.bits = bits;
  p.n_sym = n / (2 * bits);
  p.n_amp = 2 * p.n_sym;
  p.n_amp_bits = p.n_amp * (bits - 1);
  p.n_parity_signs = n - k;
  p.n_unshaped_info_signs = p.n_amp - (n - k);
  if (p.n_unshaped_info_signs < 0) {
    throw std::invalid_argument("plan_frame: code rate " + std::to_string(static_cast<double>(k) / n) +
                                " is below (M-1)/M; parity does not fit on the sign bits");
  }
  if (dist != nullptr) {
    if (static_cast<int>(dist->probs.size()) != (1 << (bits - 1))) {
      throw std::invalid_argument("plan_frame: distribution does not match the PAM size");
    }
    p.ccdm = build_composition(*dist, p.n_amp);
  }
  return p;
}

namespace detail {

inline void check_plan(const PasFramePlan& plan, const ParityCheckCode& code, const ShapedConstellation& cons) {
  if (plan.n != code.n() || plan.k != code.k()) throw std::invalid_argument("pas: plan does not match code dimensions");
  if (plan.bits != cons.bits_per_dim()) throw std::invalid_argument("pas: plan does not match constellation order");
}

}  // namespace detail

/// Maps data bits to n_sym QAM symbols via CCDM, systematic encoding, and Gray mapping.
inline std::vector<cplx> pas_encode(const PasFramePlan& plan, const ParityCheckCode& code,
                                    const ShapedConstellation& cons, const Bits& data) {
  detail::check_plan(plan, code, cons);
  if (static_cast<int>(data.size()) != plan.data_bits()) {
    throw std::invalid_argument("pas_encode: expected " + std::to_string(plan.data_bits()) + " data bits, got " +
                                std::to_string(data.size()));
  }
  const int m1 = plan.bits - 1;
  const auto shaped_end = data.begin() + plan.shaped_data_bits();

  Bits systematic(plan.k);
  std::vector<int> amps(plan.n_amp);
  if (plan.ccdm) {
    amps = ccdm_match(*plan.ccdm, Bits(data.begin(), shaped_end));
    for (int t = 0; t < plan.n_amp; ++t) {
      const std::uint32_t g = gray_encode(static_cast<std::uint32_t>(amps[t]));
      for (int b = 0; b < m1; ++b) systematic[t * m1 + b] = static_cast<std::uint8_t>(label_bit(g, m1, b));
    }
  } else {
    std::copy(data.begin(), shaped_end, systematic.begin());
    for (int t = 0; t < plan.n_amp; ++t) {
      std::uint32_t g = 0;
      for (int b = 0; b < m1; ++b) g = (g << 1) | systematic[t * m1 + b];
      amps[t] = static_cast<int>(gray_decode(g));
    }
  }
  std::copy(shaped_end, data.end(), systematic.begin() + plan.n_amp_bits);

  const Bits cw = code.encode(systematic);
  std::vector<cplx> symbols(plan.n_sym);
  for (int q = 0; q < plan.n_sym; ++q) {
    double part[2];
    for (int d = 0; d < 2; ++d) {
      const int t = 2 * q + d;
      const int sign = cw[plan.codeword_position(t, 0)];
      part[d] = cons.pam_value(cons.pam.point_index(sign, amps[t]));
    }
    symbols[q] = cplx(part[0], part[1]);
  }
  return symbols;
}

struct PasDecodeResult {
  Bits data;
  bool decode_ok = false;
  bool converged = false;
  bool dematched = false;
  int iterations = 0;
};

/// Inverse chain: LDPC decode, split systematic bits, dematch amplitudes.
/// `llrs` are in codeword order. A dematch failure leaves the shaped part of
/// `data` empty and clears `decode_ok`.
inline PasDecodeResult pas_decode(const PasFramePlan& plan, const ParityCheckCode& code,
                                  const ShapedConstellation& cons, const std::vector<double>& llrs,
                                  int max_iters = 25, double alpha = 0.75) {
  detail::check_plan(plan, code, cons);
  const DecodeResult dec = decode_minsum(code, llrs, max_iters, alpha);
  PasDecodeResult out;
  out.converged = dec.converged;
  out.iterations = dec.iterations;

  const int m1 = plan.bits - 1;
  Bits shaped_part;
  if (plan.ccdm) {
    std::vector<int> amps(plan.n_amp);
    for (int t = 0; t < plan.n_amp; ++t) {
      std::uint32_t g = 0;
      for (int b = 0; b < m1; ++b) g = (g << 1) | dec.bits[t * m1 + b];
      amps[t] = static_cast<int>(gray_decode(g));
    }
    try {
      shaped_part = ccdm_dematch(*plan.ccdm, amps);
      out.dematched = true;
    } catch (const CcdmError&) {
      out.dematched = false;
    }
  } else {
    shaped_part.assign(dec.bits.begin(), dec.bits.begin() + plan.n_amp_bits);
    out.dematched = true;
  }
  out.data = std::move(shaped_part);
  out.data.insert(out.data.end(), dec.bits.begin() + plan.n_amp_bits, dec.bits.begin() + plan.k);
  out.decode_ok = out.converged && out.dematched;
  return out;
}

}  // namespace pasmimo
