// SPDX-License-Identifier: Apache-2.0
//
// Constant composition distribution matcher realized as exact multiset
// unranking. The K_c input bits, read as a big-endian integer, select the
// lexicographically index-th arrangement of the composition.

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pasmimo/constellation.hpp"

namespace pasmimo {

using BigInt = boost::multiprecision::cpp_int;
using Bits = std::vector<std::uint8_t>;

class CcdmError : public std::runtime_error {
 public:
  enum class Kind { kLength, kComposition, kRankOverflow };
  CcdmError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// N_c!/prod(N_x!) computed exactly.
inline BigInt multinomial(const std::vector<int>& composition) {
  BigInt result = 1;
  int placed = 0;
  for (int n : composition) {
    // Running product of binomials C(placed + n, n), each exact.
    for (int i = 1; i <= n; ++i) {
      result *= (placed + i);
      result /= i;
    }
    placed += n;
  }
  return result;
}

/// floor(log2(v)) for v >= 1.
inline int floor_log2(const BigInt& v) {
  if (v <= 0) throw std::invalid_argument("floor_log2 of nonpositive value");
  return static_cast<int>(boost::multiprecision::msb(v));
}

/// Amplitude composition and matcher input length. Amplitudes are carried as
/// indices i (value 2i+1) throughout.
struct CcdmSpec {
  int n_out = 0;
  std::vector<int> composition;
  int k_in = 0;

  [[nodiscard]] int alphabet_size() const { return static_cast<int>(composition.size()); }
  [[nodiscard]] double rate() const { return n_out > 0 ? static_cast<double>(k_in) / n_out : 0.0; }
};

inline CcdmSpec make_ccdm_spec(std::vector<int> composition) {
  CcdmSpec spec;
  for (int n : composition) {
    if (n < 0) throw std::invalid_argument("ccdm composition entries must be nonnegative");
  }
  spec.n_out = std::accumulate(composition.begin(), composition.end(), 0);
  if (spec.n_out < 1) throw std::invalid_argument("ccdm composition must be nonempty");
  spec.composition = std::move(composition);
  spec.k_in = floor_log2(multinomial(spec.composition));
  return spec;
}

/// Largest-remainder quantization of n_out * P(x); ties go to the larger amplitude.
inline CcdmSpec build_composition(const MbDistribution& dist, int n_out) {
  if (n_out < 1) throw std::invalid_argument("build_composition: n_out must be >= 1");
  const int count = static_cast<int>(dist.probs.size());
  std::vector<int> comp(count);
  std::vector<double> remainder(count);
  int assigned = 0;
  for (int i = 0; i < count; ++i) {
    const double target = n_out * dist.probs[i];
    comp[i] = static_cast<int>(std::floor(target));
    remainder[i] = target - comp[i];
    assigned += comp[i];
  }
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a > b;
  });
  for (int r = 0; r < n_out - assigned; ++r) ++comp[order[r % count]];
  return make_ccdm_spec(std::move(comp));
}

namespace detail {

inline BigInt bits_to_int(const Bits& bits) {
  BigInt v = 0;
  for (std::uint8_t b : bits) {
    v <<= 1;
    if (b) v |= 1;
  }
  return v;
}

inline Bits int_to_bits(BigInt v, int width) {
  Bits out(width);
  for (int i = width - 1; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(static_cast<int>(v & 1));
    v >>= 1;
  }
  return out;
}

}  // namespace detail

inline std::vector<int> ccdm_match(const CcdmSpec& spec, const Bits& data) {
  if (static_cast<int>(data.size()) != spec.k_in) {
    throw CcdmError(CcdmError::Kind::kLength, "ccdm_match: expected " + std::to_string(spec.k_in) +
                                                  " input bits, got " + std::to_string(data.size()));
  }
  BigInt index = detail::bits_to_int(data);
  std::vector<int> remaining = spec.composition;
  BigInt total = multinomial(remaining);
  std::vector<int> out(spec.n_out);
  BigInt count;
  for (int pos = 0, left = spec.n_out; pos < spec.n_out; ++pos, --left) {
    int x = 0;
    for (; x < spec.alphabet_size(); ++x) {
      if (remaining[x] == 0) continue;
      count = total * remaining[x];
      count /= left;
      if (index < count) break;
      index -= count;
    }
    out[pos] = x;
    total = count;
    --remaining[x];
  }
  return out;
}

inline Bits ccdm_dematch(const CcdmSpec& spec, const std::vector<int>& amps) {
  if (static_cast<int>(amps.size()) != spec.n_out) {
    throw CcdmError(CcdmError::Kind::kLength, "ccdm_dematch: expected " + std::to_string(spec.n_out) +
                                                  " amplitudes, got " + std::to_string(amps.size()));
  }
  std::vector<int> remaining(spec.alphabet_size(), 0);
  for (int a : amps) {
    if (a < 0 || a >= spec.alphabet_size()) {
      throw CcdmError(CcdmError::Kind::kComposition, "ccdm_dematch: amplitude index out of range");
    }
    ++remaining[a];
  }
  if (remaining != spec.composition) {
    throw CcdmError(CcdmError::Kind::kComposition, "ccdm_dematch: sequence does not have the expected composition");
  }
  BigInt total = multinomial(remaining);
  BigInt index = 0;
  BigInt count;
  for (int pos = 0, left = spec.n_out; pos < spec.n_out; ++pos, --left) {
    const int a = amps[pos];
    for (int x = 0; x < a; ++x) {
      if (remaining[x] == 0) continue;
      count = total * remaining[x];
      count /= left;
      index += count;
    }
    total *= remaining[a];
    total /= left;
    --remaining[a];
  }
  if (index >= (BigInt(1) << spec.k_in)) {
    throw CcdmError(CcdmError::Kind::kRankOverflow, "ccdm_dematch: sequence rank exceeds 2^K_c");
  }
  return detail::int_to_bits(index, spec.k_in);
}

}  // namespace pasmimo
