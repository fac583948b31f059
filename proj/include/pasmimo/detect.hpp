// SPDX-License-Identifier: Apache-2.0
//
// Soft-output MIMO detection.
//
// All detectors minimise the prior-augmented metric
//   d(s) = ||y - H s||^2 / sigma2 + sum_j nu_j |s_j|^2
// and report max-log LLRs L = min_{bit=1} d - min_{bit=0} d, so a positive LLR
// favours bit 0. LLRs are laid out layer-major; `bit_offset[j]` is the first
// LLR of layer j.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pasmimo/channel.hpp"
#include "pasmimo/constellation.hpp"

namespace pasmimo {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct DetectionOutput {
  std::vector<double> llrs;
  /// Detected point index per layer, in the layer's constellation.
  std::vector<int> s_ml;
  double ml_metric = 0.0;
  std::int64_t nodes_visited = 0;
  std::vector<int> bit_offset;
};

class RankDeficientChannel : public std::runtime_error {
 public:
  explicit RankDeficientChannel(int layer)
      : std::runtime_error("channel is rank deficient at layer " + std::to_string(layer)), layer_(layer) {}
  [[nodiscard]] int layer() const { return layer_; }

 private:
  int layer_;
};

/// H Pi = Q R, R upper triangular with positive real diagonal. Column
/// perm[i] of H sits at tree level i; the search starts at level M_t-1.
struct QrFactorization {
  CMatrix q;
  CMatrix r;
  std::vector<int> perm;

  [[nodiscard]] int layers() const { return static_cast<int>(perm.size()); }
  [[nodiscard]] CVector rotate(const CVector& y) const { return q.adjoint() * y; }
};

/// QR of the column-permuted channel. Columns are sorted by ascending norm so
/// the strongest layer is at the root; `root_layer >= 0` forces that column to
/// the root instead, the rest keeping the sorted order.
inline QrFactorization sorted_qr(const CMatrix& h, int root_layer = -1) {
  const int tx = static_cast<int>(h.cols());
  const int rx = static_cast<int>(h.rows());
  if (rx < tx) throw std::invalid_argument("sorted_qr: need at least as many receive as transmit antennas");
  if (root_layer >= tx) throw std::invalid_argument("sorted_qr: root layer out of range");

  QrFactorization f;
  f.perm.resize(tx);
  std::iota(f.perm.begin(), f.perm.end(), 0);
  std::vector<double> norms(tx);
  for (int c = 0; c < tx; ++c) norms[c] = h.col(c).squaredNorm();
  std::stable_sort(f.perm.begin(), f.perm.end(), [&](int a, int b) { return norms[a] < norms[b]; });
  if (root_layer >= 0) {
    f.perm.erase(std::find(f.perm.begin(), f.perm.end(), root_layer));
    f.perm.push_back(root_layer);
  }

  // Modified Gram-Schmidt with one reorthogonalization pass.
  f.q.resize(rx, tx);
  f.r = CMatrix::Zero(tx, tx);
  const double scale = std::max(h.norm(), std::numeric_limits<double>::min());
  for (int i = 0; i < tx; ++i) {
    CVector v = h.col(f.perm[i]);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < i; ++j) {
        const cplx c = f.q.col(j).dot(v);
        f.r(j, i) += c;
        v -= c * f.q.col(j);
      }
    }
    const double diag = v.norm();
    if (!(diag > 1e-12 * scale)) throw RankDeficientChannel(f.perm[i]);
    f.r(i, i) = diag;
    f.q.col(i) = v / diag;
  }
  return f;
}

/// Single max-log demapping of z = gain * s + w, E|w|^2 = noise_var, into
/// `out` (2M values). Returns the index of the best point.
inline int scalar_maxlog(cplx z, cplx gain, double noise_var, const ShapedConstellation& cons, bool use_prior,
                         std::span<double> out) {
  const int nb = cons.bits_per_symbol();
  double best0[16], best1[16];
  std::fill(best0, best0 + nb, kInfinity);
  std::fill(best1, best1 + nb, kInfinity);
  int best = 0;
  double best_metric = kInfinity;
  for (int q = 0; q < cons.size(); ++q) {
    double m = std::norm(z - gain * cons.points[q]) / noise_var;
    if (use_prior) m += cons.prior_cost[q];
    if (m < best_metric) {
      best_metric = m;
      best = q;
    }
    for (int b = 0; b < nb; ++b) {
      double& slot = cons.bit(q, b) ? best1[b] : best0[b];
      slot = std::min(slot, m);
    }
  }
  for (int b = 0; b < nb; ++b) out[b] = best1[b] - best0[b];
  return best;
}

namespace detail {

inline std::vector<int> bit_offsets(std::span<const ShapedConstellation> layers) {
  std::vector<int> off(layers.size() + 1, 0);
  for (std::size_t j = 0; j < layers.size(); ++j) off[j + 1] = off[j] + layers[j].bits_per_symbol();
  return off;
}

inline void check_layers(const CMatrix& h, std::span<const ShapedConstellation> layers) {
  if (static_cast<Eigen::Index>(layers.size()) != h.cols()) {
    throw std::invalid_argument("detector: one constellation per transmit layer is required");
  }
}

/// Point indices of a constellation split by the value of each label bit.
struct BitSubsets {
  // subsets[b][v] lists points whose label bit b equals v.
  std::vector<std::array<std::vector<int>, 2>> subsets;

  explicit BitSubsets(const ShapedConstellation& cons) : subsets(cons.bits_per_symbol()) {
    for (int b = 0; b < cons.bits_per_symbol(); ++b) {
      for (int q = 0; q < cons.size(); ++q) subsets[b][cons.bit(q, b)].push_back(q);
    }
  }
};

/// Depth-first Schnorr-Euchner search over one factorization. Children are
/// visited in ascending order of their prior-augmented branch metric.
class TreeSearch {
 public:
  struct Result {
    bool found = false;
    double metric = kInfinity;
    std::vector<int> path;  // point index per tree level
    std::int64_t nodes = 0;
  };

  TreeSearch(const QrFactorization& qr, double sigma2, std::span<const ShapedConstellation> layers, bool use_priors)
      : qr_(qr), sigma2_(sigma2), levels_(qr.layers()) {
    for (int i = 0; i < levels_; ++i) {
      cons_.push_back(&layers[qr.perm[i]]);
      prior_.push_back(use_priors ? layers[qr.perm[i]].nu_scaled : 0.0);
    }
    cand_.resize(levels_);
    for (int i = 0; i < levels_; ++i) cand_[i].reserve(cons_[i]->size());
    pos_.resize(levels_);
    dist_.resize(levels_);
    sym_.resize(levels_);
    idx_.resize(levels_);
  }

  /// Prior-augmented metric of a full assignment given per tree level.
  [[nodiscard]] double metric(const CVector& y_tilde, std::span<const int> path) const {
    double d = 0.0;
    for (int i = levels_ - 1; i >= 0; --i) {
      cplx b = y_tilde(i);
      for (int j = i + 1; j < levels_; ++j) b -= qr_.r(i, j) * cons_[j]->points[path[j]];
      d += branch(i, b, path[i]);
    }
    return d;
  }

  /// Searches for the minimum-metric leaf with d <= radius. `root_subset`
  /// restricts the candidates at the root level when non-null.
  Result run(const CVector& y_tilde, double radius, const std::vector<int>* root_subset) {
    Result res;
    const int top = levels_ - 1;
    expand(y_tilde, top, root_subset);
    int level = top;
    while (true) {
      if (pos_[level] < cand_[level].size()) {
        const auto [inc, q] = cand_[level][pos_[level]++];
        const double d = (level == top ? 0.0 : dist_[level + 1]) + inc;
        if (d > radius) {
          pos_[level] = cand_[level].size();
          continue;
        }
        ++res.nodes;
        idx_[level] = q;
        sym_[level] = cons_[level]->points[q];
        dist_[level] = d;
        if (level == 0) {
          if (!res.found || d < res.metric) {
            res.found = true;
            res.metric = d;
            res.path.assign(idx_.begin(), idx_.end());
            radius = d;
          }
        } else {
          --level;
          expand(y_tilde, level, nullptr);
        }
      } else {
        if (level == top) break;
        ++level;
      }
    }
    return res;
  }

 private:
  [[nodiscard]] double branch(int level, cplx b, int q) const {
    // Same arithmetic as expand() so leaf metrics agree bit for bit.
    const ShapedConstellation& c = *cons_[level];
    const double rii = qr_.r(level, level).real();
    const cplx z = b / rii;
    const double gain = rii * rii / sigma2_;
    const double ar = c.pam_value(q / c.pam_size());
    const double ai = c.pam_value(q % c.pam_size());
    const double dr = z.real() - ar;
    const double di = z.imag() - ai;
    return (gain * dr * dr + prior_[level] * ar * ar) + (gain * di * di + prior_[level] * ai * ai);
  }

  void expand(const CVector& y_tilde, int level, const std::vector<int>* subset) {
    cplx b = y_tilde(level);
    for (int j = level + 1; j < levels_; ++j) b -= qr_.r(level, j) * sym_[j];
    const ShapedConstellation& c = *cons_[level];
    const double rii = qr_.r(level, level).real();
    const cplx z = b / rii;
    const double gain = rii * rii / sigma2_;
    const double nu = prior_[level];
    const int n = c.pam_size();
    // The QAM metric separates into real and imaginary PAM terms.
    for (int k = 0; k < n; ++k) {
      const double a = c.pam_value(k);
      const double dr = z.real() - a;
      const double di = z.imag() - a;
      re_[k] = gain * dr * dr + nu * a * a;
      im_[k] = gain * di * di + nu * a * a;
    }
    auto& cand = cand_[level];
    cand.clear();
    if (subset != nullptr) {
      for (int q : *subset) cand.emplace_back(re_[q / n] + im_[q % n], q);
    } else {
      for (int kr = 0; kr < n; ++kr) {
        for (int ki = 0; ki < n; ++ki) cand.emplace_back(re_[kr] + im_[ki], kr * n + ki);
      }
    }
    std::sort(cand.begin(), cand.end());
    pos_[level] = 0;
  }

  const QrFactorization& qr_;
  double sigma2_;
  int levels_;
  std::vector<const ShapedConstellation*> cons_;
  std::vector<double> prior_;
  std::vector<std::vector<std::pair<double, int>>> cand_;
  std::vector<std::size_t> pos_;
  std::vector<double> dist_;
  std::vector<cplx> sym_;
  std::vector<int> idx_;
  double re_[64];
  double im_[64];
};

}  // namespace detail

struct MlResult {
  std::vector<int> s_ml;  // point index per layer
  double metric = 0.0;
  std::int64_t nodes = 0;
};

/// Prior-augmented ML detection by sphere search over a factorization.
inline MlResult sd_ml(const QrFactorization& qr, const CVector& y_tilde, double sigma2,
                      std::span<const ShapedConstellation> layers, bool use_priors = true) {
  detail::TreeSearch search(qr, sigma2, layers, use_priors);
  const auto res = search.run(y_tilde, kInfinity, nullptr);
  MlResult out;
  out.s_ml.resize(qr.layers());
  for (int i = 0; i < qr.layers(); ++i) out.s_ml[qr.perm[i]] = res.path[i];
  out.metric = res.metric;
  out.nodes = res.nodes;
  return out;
}

/// Soft-output sphere detector using repeated tree search with LLR clipping.
///
/// The M_t + 1 factorizations depend only on H and are built once; `detect`
/// may then be called for every received vector in the coherence block.
class SoftSphereDetector {
 public:
  SoftSphereDetector(const CMatrix& h, double sigma2, std::span<const ShapedConstellation> layers,
                     double lambda = kInfinity, bool use_priors = true)
      : sigma2_(sigma2), lambda_(lambda), use_priors_(use_priors), layers_(layers.begin(), layers.end()) {
    detail::check_layers(h, layers);
    if (!(sigma2 > 0.0)) throw std::invalid_argument("SoftSphereDetector: sigma2 must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("SoftSphereDetector: lambda must be positive");
    const int tx = static_cast<int>(h.cols());
    ml_qr_ = sorted_qr(h);
    for (int j = 0; j < tx; ++j) layer_qr_.push_back(sorted_qr(h, j));
    offsets_ = detail::bit_offsets(layers_);
    for (const auto& c : layers_) subsets_.emplace_back(c);
  }

  [[nodiscard]] const QrFactorization& ml_factorization() const { return ml_qr_; }
  [[nodiscard]] const QrFactorization& layer_factorization(int j) const { return layer_qr_[j]; }

  DetectionOutput detect(const CVector& y) const {
    const int tx = static_cast<int>(layers_.size());
    DetectionOutput out;
    out.bit_offset.assign(offsets_.begin(), offsets_.end() - 1);
    out.llrs.resize(offsets_.back());

    const MlResult ml = sd_ml(ml_qr_, ml_qr_.rotate(y), sigma2_, layers_, use_priors_);
    out.s_ml = ml.s_ml;
    out.ml_metric = ml.metric;
    out.nodes_visited = ml.nodes;

    std::vector<int> path(tx);
    for (int j = 0; j < tx; ++j) {
      const QrFactorization& qr = layer_qr_[j];
      const CVector yt = qr.rotate(y);
      detail::TreeSearch search(qr, sigma2_, layers_, use_priors_);
      for (int i = 0; i < tx; ++i) path[i] = ml.s_ml[qr.perm[i]];
      const double d_ml = search.metric(yt, path);
      const ShapedConstellation& c = layers_[j];
      for (int b = 0; b < c.bits_per_symbol(); ++b) {
        const int ml_bit = c.bit(ml.s_ml[j], b);
        const auto& counter_set = subsets_[j].subsets[b][1 - ml_bit];
        const auto res = search.run(yt, d_ml + lambda_, &counter_set);
        out.nodes_visited += res.nodes;
        const double mag = res.found ? std::clamp(res.metric - d_ml, 0.0, lambda_) : lambda_;
        out.llrs[offsets_[j] + b] = ml_bit == 0 ? mag : -mag;
      }
    }
    return out;
  }

 private:
  double sigma2_;
  double lambda_;
  bool use_priors_;
  std::vector<ShapedConstellation> layers_;
  QrFactorization ml_qr_;
  std::vector<QrFactorization> layer_qr_;
  std::vector<int> offsets_;
  std::vector<detail::BitSubsets> subsets_;
};

inline DetectionOutput sd_soft_rts(const CVector& y, const CMatrix& h, double sigma2,
                                   std::span<const ShapedConstellation> layers, double lambda = kInfinity,
                                   bool use_priors = true) {
  return SoftSphereDetector(h, sigma2, layers, lambda, use_priors).detect(y);
}

/// Exhaustive evaluation of the max-log LLRs. Serves as the reference for the
/// sphere detector; limited to 2^20 candidate vectors.
inline DetectionOutput bruteforce_maxlog(const CVector& y, const CMatrix& h, double sigma2,
                                         std::span<const ShapedConstellation> layers, bool use_priors = true) {
  detail::check_layers(h, layers);
  const int tx = static_cast<int>(layers.size());
  double candidates = 1.0;
  for (const auto& c : layers) candidates *= c.size();
  if (candidates > static_cast<double>(1 << 20)) {
    throw std::invalid_argument("bruteforce_maxlog: more than 2^20 candidate vectors");
  }
  const auto offsets = detail::bit_offsets(layers);
  const int total_bits = offsets.back();
  std::vector<double> best0(total_bits, kInfinity), best1(total_bits, kInfinity);

  DetectionOutput out;
  out.bit_offset.assign(offsets.begin(), offsets.end() - 1);
  out.s_ml.assign(tx, 0);
  out.ml_metric = kInfinity;

  std::vector<int> idx(tx, 0);
  CVector s(tx);
  while (true) {
    double prior = 0.0;
    for (int j = 0; j < tx; ++j) {
      s(j) = layers[j].points[idx[j]];
      if (use_priors) prior += layers[j].prior_cost[idx[j]];
    }
    const double m = (y - h * s).squaredNorm() / sigma2 + prior;
    ++out.nodes_visited;
    if (m < out.ml_metric) {
      out.ml_metric = m;
      out.s_ml = idx;
    }
    for (int j = 0; j < tx; ++j) {
      for (int b = 0; b < layers[j].bits_per_symbol(); ++b) {
        double& slot = layers[j].bit(idx[j], b) ? best1[offsets[j] + b] : best0[offsets[j] + b];
        slot = std::min(slot, m);
      }
    }
    int j = 0;
    for (; j < tx; ++j) {
      if (++idx[j] < layers[j].size()) break;
      idx[j] = 0;
    }
    if (j == tx) break;
  }
  out.llrs.resize(total_bits);
  for (int b = 0; b < total_bits; ++b) out.llrs[b] = best1[b] - best0[b];
  return out;
}

/// Linear MMSE filtering followed by per-layer scalar max-log demapping; the
/// residual interference is treated as Gaussian noise.
inline DetectionOutput mmse_soft(const CVector& y, const CMatrix& h, double sigma2,
                                 std::span<const ShapedConstellation> layers, bool use_priors = true) {
  detail::check_layers(h, layers);
  const int tx = static_cast<int>(h.cols());
  const CMatrix gram = h.adjoint() * h + sigma2 * CMatrix::Identity(tx, tx);
  Eigen::LDLT<CMatrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().real().minCoeff() > 0.0)) {
    throw std::runtime_error("mmse_soft: regularized Gram matrix is singular");
  }
  const CMatrix w = ldlt.solve(h.adjoint());  // tx x rx, rows are filters
  const CVector z = w * y;
  const CMatrix eff = w * h;

  const auto offsets = detail::bit_offsets(layers);
  DetectionOutput out;
  out.bit_offset.assign(offsets.begin(), offsets.end() - 1);
  out.llrs.resize(offsets.back());
  out.s_ml.resize(tx);
  for (int k = 0; k < tx; ++k) {
    const cplx gain = eff(k, k);
    double var = sigma2 * w.row(k).squaredNorm();
    for (int l = 0; l < tx; ++l) {
      if (l != k) var += std::norm(eff(k, l));
    }
    out.s_ml[k] = scalar_maxlog(z(k), gain, var, layers[k], use_priors,
                                std::span<double>(out.llrs).subspan(offsets[k], layers[k].bits_per_symbol()));
  }
  return out;
}

}  // namespace pasmimo
