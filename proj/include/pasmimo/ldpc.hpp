// SPDX-License-Identifier: Apache-2.0
//
// Systematic LDPC codes loaded from alist files, with layered normalized
// min-sum decoding.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pasmimo {

using Bits = std::vector<std::uint8_t>;

class AlistError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(int rank, int rows)
      : std::runtime_error("parity-check matrix is rank deficient: rank " + std::to_string(rank) + " of " +
                           std::to_string(rows) + " rows"),
        rank_(rank),
        rows_(rows) {}
  [[nodiscard]] int rank() const { return rank_; }
  [[nodiscard]] int rows() const { return rows_; }

 private:
  int rank_;
  int rows_;
};

/// Sparse binary matrix as read from an alist file (0-based indices).
struct SparseBinaryMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<int>> row_cols;
};

/// Binary linear code in systematic order: codeword positions [0, K) carry the
/// data, [K, N) the parity. `column_of[i]` is the alist column holding
/// systematic position i.
class ParityCheckCode {
 public:
  ParityCheckCode() = default;

  explicit ParityCheckCode(const SparseBinaryMatrix& h) { build(h); }

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] int checks() const { return n_ - k_; }
  [[nodiscard]] double rate() const { return static_cast<double>(k_) / n_; }
  [[nodiscard]] const std::vector<int>& column_of() const { return column_of_; }
  /// Check rows over systematic-order positions, in file order.
  [[nodiscard]] const std::vector<std::vector<int>>& rows() const { return rows_; }

  [[nodiscard]] Bits encode(const Bits& data) const {
    if (static_cast<int>(data.size()) != k_) {
      throw std::invalid_argument("encode: expected " + std::to_string(k_) + " data bits, got " +
                                  std::to_string(data.size()));
    }
    const int words = (k_ + 63) / 64;
    std::vector<std::uint64_t> packed(words, 0);
    for (int i = 0; i < k_; ++i) {
      if (data[i]) packed[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    Bits cw(n_);
    std::copy(data.begin(), data.end(), cw.begin());
    for (int r = 0; r < checks(); ++r) {
      std::uint64_t acc = 0;
      const auto* row = &parity_gen_[static_cast<std::size_t>(r) * words];
      for (int w = 0; w < words; ++w) acc ^= row[w] & packed[w];
      cw[k_ + r] = static_cast<std::uint8_t>(__builtin_parityll(acc));
    }
    return cw;
  }

  [[nodiscard]] bool syndrome_zero(const Bits& word) const {
    for (const auto& row : rows_) {
      int s = 0;
      for (int c : row) s ^= word[c];
      if (s) return false;
    }
    return true;
  }

 private:
  void build(const SparseBinaryMatrix& h) {
    const int m = h.rows;
    n_ = h.cols;
    const int words = (n_ + 63) / 64;
    std::vector<std::uint64_t> dense(static_cast<std::size_t>(m) * words, 0);
    auto at = [&](int r) { return &dense[static_cast<std::size_t>(r) * words]; };
    for (int r = 0; r < m; ++r) {
      for (int c : h.row_cols[r]) at(r)[c / 64] ^= std::uint64_t{1} << (c % 64);
    }
    auto get = [&](int r, int c) { return (at(r)[c / 64] >> (c % 64)) & 1u; };

    // Reduce to row echelon form, choosing pivots from the right so a trailing
    // identity block (if present) becomes the parity part.
    std::vector<int> pivot_col;
    std::vector<char> is_pivot(n_, 0);
    int rank = 0;
    for (int c = n_ - 1; c >= 0 && rank < m; --c) {
      int sel = -1;
      for (int r = rank; r < m; ++r) {
        if (get(r, c)) {
          sel = r;
          break;
        }
      }
      if (sel < 0) continue;
      if (sel != rank) std::swap_ranges(at(sel), at(sel) + words, at(rank));
      for (int r = 0; r < m; ++r) {
        if (r != rank && get(r, c)) {
          for (int w = 0; w < words; ++w) at(r)[w] ^= at(rank)[w];
        }
      }
      pivot_col.push_back(c);
      is_pivot[c] = 1;
      ++rank;
    }
    if (rank < m) throw RankDeficientError(rank, m);

    // Parity positions follow ascending column order.
    std::vector<int> row_order(m);
    for (int r = 0; r < m; ++r) row_order[r] = r;
    std::sort(row_order.begin(), row_order.end(), [&](int a, int b) { return pivot_col[a] < pivot_col[b]; });

    k_ = n_ - m;
    column_of_.clear();
    for (int c = 0; c < n_; ++c) {
      if (!is_pivot[c]) column_of_.push_back(c);
    }
    for (int r = 0; r < m; ++r) column_of_.push_back(pivot_col[row_order[r]]);

    std::vector<int> position_of(n_);
    for (int i = 0; i < n_; ++i) position_of[column_of_[i]] = i;

    const int kwords = (k_ + 63) / 64;
    parity_gen_.assign(static_cast<std::size_t>(m) * kwords, 0);
    for (int r = 0; r < m; ++r) {
      for (int i = 0; i < k_; ++i) {
        if (get(row_order[r], column_of_[i])) parity_gen_[static_cast<std::size_t>(r) * kwords + i / 64] |= std::uint64_t{1} << (i % 64);
      }
    }

    rows_.assign(m, {});
    for (int r = 0; r < m; ++r) {
      for (int c : h.row_cols[r]) rows_[r].push_back(position_of[c]);
    }
  }

  int n_ = 0;
  int k_ = 0;
  std::vector<int> column_of_;
  std::vector<std::vector<int>> rows_;
  std::vector<std::uint64_t> parity_gen_;
};

inline SparseBinaryMatrix parse_alist(const std::string& text) {
  std::istringstream in(text);
  auto read_int = [&](const char* what) {
    long long v;
    if (!(in >> v)) throw AlistError(std::string("alist: unexpected end of input while reading ") + what);
    if (v < 0 || v > std::numeric_limits<int>::max()) throw AlistError(std::string("alist: bad value for ") + what);
    return static_cast<int>(v);
  };

  SparseBinaryMatrix h;
  h.cols = read_int("column count");
  h.rows = read_int("row count");
  if (h.cols < 1 || h.rows < 1) throw AlistError("alist: matrix dimensions must be positive");
  const int max_col_deg = read_int("max column degree");
  const int max_row_deg = read_int("max row degree");

  std::vector<int> col_deg(h.cols), row_deg(h.rows);
  for (int& d : col_deg) d = read_int("column degree");
  for (int& d : row_deg) d = read_int("row degree");
  if (*std::max_element(col_deg.begin(), col_deg.end()) != max_col_deg) {
    throw AlistError("alist: max column degree does not match degree list");
  }
  if (*std::max_element(row_deg.begin(), row_deg.end()) != max_row_deg) {
    throw AlistError("alist: max row degree does not match degree list");
  }

  // Index lists may be zero-padded up to the maximum degree; padding is
  // present for a list when the next token would otherwise be a zero.
  auto read_list = [&](int degree, int max_degree, int limit, const char* what) {
    std::vector<int> idx;
    for (int i = 0; i < degree; ++i) {
      const int v = read_int(what);
      if (v < 1 || v > limit) throw AlistError(std::string("alist: index out of range in ") + what);
      idx.push_back(v - 1);
    }
    for (int i = degree; i < max_degree; ++i) {
      const auto pos = in.tellg();
      long long v;
      if (!(in >> v)) {
        in.clear();
        in.seekg(pos);
        break;
      }
      if (v != 0) {
        in.seekg(pos);
        break;
      }
    }
    return idx;
  };

  std::vector<std::vector<int>> col_rows(h.cols);
  for (int c = 0; c < h.cols; ++c) col_rows[c] = read_list(col_deg[c], max_col_deg, h.rows, "column lists");
  h.row_cols.resize(h.rows);
  for (int r = 0; r < h.rows; ++r) h.row_cols[r] = read_list(row_deg[r], max_row_deg, h.cols, "row lists");

  // Column and row views must describe the same edge set.
  std::vector<std::vector<int>> from_cols(h.rows);
  for (int c = 0; c < h.cols; ++c) {
    for (int r : col_rows[c]) from_cols[r].push_back(c);
  }
  for (int r = 0; r < h.rows; ++r) {
    auto a = from_cols[r];
    auto b = h.row_cols[r];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw AlistError("alist: row " + std::to_string(r + 1) + " disagrees with column lists");
    if (std::adjacent_find(b.begin(), b.end()) != b.end()) {
      throw AlistError("alist: duplicate index in row " + std::to_string(r + 1));
    }
  }
  return h;
}

inline std::string write_alist(const SparseBinaryMatrix& h) {
  std::vector<std::vector<int>> col_rows(h.cols);
  for (int r = 0; r < h.rows; ++r) {
    for (int c : h.row_cols[r]) col_rows[c].push_back(r);
  }
  std::size_t max_col = 0, max_row = 0;
  for (const auto& c : col_rows) max_col = std::max(max_col, c.size());
  for (const auto& r : h.row_cols) max_row = std::max(max_row, r.size());

  std::ostringstream out;
  out << h.cols << ' ' << h.rows << '\n' << max_col << ' ' << max_row << '\n';
  auto degrees = [&](const std::vector<std::vector<int>>& lists) {
    for (std::size_t i = 0; i < lists.size(); ++i) out << (i ? " " : "") << lists[i].size();
    out << '\n';
  };
  degrees(col_rows);
  degrees(h.row_cols);
  auto lists = [&](const std::vector<std::vector<int>>& ls, std::size_t width) {
    for (const auto& l : ls) {
      std::vector<int> sorted = l;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < width; ++i) {
        out << (i ? " " : "") << (i < sorted.size() ? sorted[i] + 1 : 0);
      }
      out << '\n';
    }
  };
  lists(col_rows, max_col);
  lists(h.row_cols, max_row);
  return out.str();
}

inline ParityCheckCode load_alist(const std::string& text) { return ParityCheckCode(parse_alist(text)); }

inline Bits encode(const ParityCheckCode& code, const Bits& data) { return code.encode(data); }

struct DecodeResult {
  Bits bits;
  int iterations = 0;
  bool converged = false;
};

/// Layered normalized min-sum; one layer per check row, rows in file order.
/// LLR sign convention: positive favours bit 0. A zero posterior is treated as
/// undecided and prevents convergence.
inline DecodeResult decode_minsum(const ParityCheckCode& code, const std::vector<double>& llrs, int max_iters = 25,
                                  double alpha = 0.75) {
  if (static_cast<int>(llrs.size()) != code.n()) {
    throw std::invalid_argument("decode_minsum: expected " + std::to_string(code.n()) + " LLRs");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("decode_minsum: alpha must be in (0, 1]");

  const auto& rows = code.rows();
  std::vector<double> posterior = llrs;
  std::vector<std::vector<double>> check_msg(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) check_msg[r].assign(rows[r].size(), 0.0);
  std::vector<double> incoming;

  DecodeResult result;
  result.bits.assign(code.n(), 0);
  auto decide = [&] {
    bool decided = true;
    for (int i = 0; i < code.n(); ++i) {
      result.bits[i] = posterior[i] < 0.0 ? 1 : 0;
      if (posterior[i] == 0.0) decided = false;
    }
    return decided;
  };

  for (int it = 1; it <= max_iters; ++it) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& cols = rows[r];
      auto& msg = check_msg[r];
      incoming.resize(cols.size());
      double min1 = std::numeric_limits<double>::infinity();
      double min2 = min1;
      std::size_t min_pos = 0;
      int sign_parity = 0;
      for (std::size_t e = 0; e < cols.size(); ++e) {
        const double q = posterior[cols[e]] - msg[e];
        incoming[e] = q;
        const double mag = std::abs(q);
        if (q < 0.0) sign_parity ^= 1;
        if (mag < min1) {
          min2 = min1;
          min1 = mag;
          min_pos = e;
        } else if (mag < min2) {
          min2 = mag;
        }
      }
      for (std::size_t e = 0; e < cols.size(); ++e) {
        const double mag = alpha * (e == min_pos ? min2 : min1);
        const int s = sign_parity ^ (incoming[e] < 0.0 ? 1 : 0);
        msg[e] = s ? -mag : mag;
        posterior[cols[e]] = incoming[e] + msg[e];
      }
    }
    result.iterations = it;
    if (decide() && code.syndrome_zero(result.bits)) {
      result.converged = true;
      return result;
    }
  }
  return result;
}

}  // namespace pasmimo
