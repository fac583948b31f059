// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "pasmimo/ldpc.hpp"

using namespace pasmimo;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParityCheckCode hamming() { return load_alist(read_file(PASMIMO_DATA_DIR "/codes/hamming_7_4.alist")); }

std::vector<double> to_llrs(const Bits& cw, double mag) {
  std::vector<double> l(cw.size());
  for (std::size_t i = 0; i < cw.size(); ++i) l[i] = cw[i] ? -mag : mag;
  return l;
}

Bits random_bits(std::mt19937_64& rng, int n) {
  Bits b(n);
  for (auto& x : b) x = rng() & 1u;
  return b;
}

}  // namespace

TEST(Alist, HammingDimensions) {
  const auto code = hamming();
  EXPECT_EQ(code.n(), 7);
  EXPECT_EQ(code.k(), 4);
  EXPECT_EQ(code.column_of(), (std::vector<int>{0, 1, 2, 3, 4, 5, 6}));
}

TEST(Alist, HammingEncodeByHand) {
  // H = [P^T | I]: data 1000 has parity (1,1,0); data 0111 has parity (0,0,1).
  const auto code = hamming();
  EXPECT_EQ(encode(code, {1, 0, 0, 0}), (Bits{1, 0, 0, 0, 1, 1, 0}));
  EXPECT_EQ(encode(code, {0, 1, 1, 1}), (Bits{0, 1, 1, 1, 0, 0, 1}));
  EXPECT_EQ(encode(code, {0, 0, 0, 0}), Bits(7, 0));
}

TEST(Alist, InconsistentDegreeListRejected) {
  // Column 1 claims degree 3 but its row list entries disagree.
  const std::string bad =
      "7 3\n3 4\n3 2 2 3 1 1 1\n4 4 4\n1 2 3\n1 3 0\n2 3 0\n1 2 3\n1 0 0\n2 0 0\n3 0 0\n"
      "1 2 4 5\n1 3 4 6\n2 3 4 7\n";
  EXPECT_THROW(load_alist(bad), AlistError);
  EXPECT_THROW(load_alist("7 3\n3 4\n2 2"), AlistError);
}

TEST(Alist, RankDeficiencyReported) {
  // Third row duplicates the first.
  SparseBinaryMatrix h;
  h.rows = 3;
  h.cols = 6;
  h.row_cols = {{0, 1, 3}, {1, 2, 4}, {0, 1, 3}};
  try {
    ParityCheckCode code(h);
    FAIL();
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.rank(), 2);
    EXPECT_EQ(e.rows(), 3);
  }
}

TEST(Alist, WriteParseRoundTrip) {
  const auto h = parse_alist(read_file(PASMIMO_DATA_DIR "/codes/peg_1200_800.alist"));
  const auto again = parse_alist(write_alist(h));
  EXPECT_EQ(again.rows, h.rows);
  EXPECT_EQ(again.cols, h.cols);
  EXPECT_EQ(again.row_cols, h.row_cols);
}

TEST(Encode, ZeroSyndromeAndLinearity) {
  std::mt19937_64 rng(1);
  for (const char* name : {"/codes/hamming_7_4.alist", "/codes/peg_1200_800.alist", "/codes/peg_1200_1056.alist"}) {
    const auto code = load_alist(read_file(std::string(PASMIMO_DATA_DIR) + name));
    for (int t = 0; t < 20; ++t) {
      const Bits a = random_bits(rng, code.k());
      const Bits b = random_bits(rng, code.k());
      Bits ab(code.k());
      for (int i = 0; i < code.k(); ++i) ab[i] = a[i] ^ b[i];
      const Bits ca = encode(code, a), cb = encode(code, b), cab = encode(code, ab);
      EXPECT_TRUE(code.syndrome_zero(ca));
      EXPECT_TRUE(std::equal(a.begin(), a.end(), ca.begin()));
      for (int i = 0; i < code.n(); ++i) ASSERT_EQ(cab[i], ca[i] ^ cb[i]);
    }
  }
}

TEST(Encode, LengthMismatch) { EXPECT_THROW(encode(hamming(), {1, 0, 1}), std::invalid_argument); }

TEST(MinSum, NoiselessConvergesFirstIteration) {
  const auto code = hamming();
  const auto res = decode_minsum(code, to_llrs(encode(code, {1, 0, 1, 1}), 20.0), 25, 0.75);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 1);
  EXPECT_EQ(res.bits, encode(code, {1, 0, 1, 1}));
}

TEST(MinSum, AllHammingWordsDecode) {
  const auto code = hamming();
  for (int v = 0; v < 16; ++v) {
    const Bits d = {static_cast<std::uint8_t>(v >> 3 & 1), static_cast<std::uint8_t>(v >> 2 & 1),
                    static_cast<std::uint8_t>(v >> 1 & 1), static_cast<std::uint8_t>(v & 1)};
    const auto res = decode_minsum(code, to_llrs(encode(code, d), 20.0));
    EXPECT_TRUE(res.converged);
    EXPECT_TRUE(std::equal(d.begin(), d.end(), res.bits.begin()));
  }
}

TEST(MinSum, CorrectsSingleFlippedBit) {
  const auto code = hamming();
  const Bits cw = encode(code, {1, 1, 0, 1});
  for (int pos = 0; pos < 7; ++pos) {
    auto llrs = to_llrs(cw, 4.0);
    llrs[pos] = -0.5 * llrs[pos];
    const auto res = decode_minsum(code, llrs, 25, 0.75);
    EXPECT_TRUE(res.converged) << "flipped position " << pos;
    EXPECT_EQ(res.bits, cw) << "flipped position " << pos;
  }
}

TEST(MinSum, ErasureDoesNotConverge) {
  const auto code = hamming();
  const auto res = decode_minsum(code, std::vector<double>(7, 0.0));
  EXPECT_FALSE(res.converged);
}

TEST(MinSum, ConvergedImpliesZeroSyndrome) {
  const auto code = load_alist(read_file(PASMIMO_DATA_DIR "/codes/peg_1200_1056.alist"));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const Bits cw = encode(code, random_bits(rng, code.k()));
    const double sigma = 0.5 + 0.01 * t;
    std::vector<double> llrs(code.n());
    for (int i = 0; i < code.n(); ++i) {
      const double y = (cw[i] ? -1.0 : 1.0) + sigma * noise(rng);
      llrs[i] = 2.0 * y / (sigma * sigma);
    }
    const auto res = decode_minsum(code, llrs, 25, 0.75);
    if (res.converged) EXPECT_TRUE(code.syndrome_zero(res.bits));
  }
}

TEST(MinSum, AwgnBerImprovesWithSnr) {
  const auto code = load_alist(read_file(PASMIMO_DATA_DIR "/codes/peg_1200_800.alist"));
  std::normal_distribution<double> noise(0.0, 1.0);
  auto ber_at = [&](double ebn0_db) {
    std::mt19937_64 rng(77);
    const double es = code.rate() * std::pow(10.0, ebn0_db / 10.0);
    const double sigma = std::sqrt(1.0 / (2.0 * es));
    long errors = 0, total = 0;
    for (int f = 0; f < 60; ++f) {
      const Bits d = random_bits(rng, code.k());
      const Bits cw = encode(code, d);
      std::vector<double> llrs(code.n());
      for (int i = 0; i < code.n(); ++i) {
        const double y = (cw[i] ? -1.0 : 1.0) + sigma * noise(rng);
        llrs[i] = 2.0 * y / (sigma * sigma);
      }
      const auto res = decode_minsum(code, llrs, 25, 0.75);
      for (int i = 0; i < code.k(); ++i) errors += res.bits[i] != d[i];
      total += code.k();
    }
    return static_cast<double>(errors) / total;
  };
  double previous = 1.0;
  for (double snr : {0.0, 2.0, 4.0}) {
    const double ber = ber_at(snr);
    EXPECT_LE(ber, previous) << "Eb/N0 " << snr;
    previous = ber;
  }
  EXPECT_LT(previous, 1e-3);
}
