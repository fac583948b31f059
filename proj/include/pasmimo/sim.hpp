// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo link harness: scenario configuration, per-SNR simulation with a
// deterministic early-stop rule, sweeps and CSV output.

#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pasmimo/ccdm.hpp"
#include "pasmimo/channel.hpp"
#include "pasmimo/constellation.hpp"
#include "pasmimo/detect.hpp"
#include "pasmimo/ldpc.hpp"
#include "pasmimo/pas.hpp"

namespace pasmimo {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DetectorKind { kSphere, kMmse, kBruteForce };

struct ScenarioConfig {
  int pam_bits = 2;
  int tx = 2;
  int rx = 2;
  /// uniform | ps | compare (uniform and ps) | mixed (three layer-shaping patterns)
  std::string scenario = "compare";
  /// Per-layer shaping flags for an uncoded run; used when scenario = layers.
  std::vector<int> layer_shaping;
  std::string code_uniform;
  std::string code_ps;
  std::optional<double> nu;
  std::optional<double> target_rate;
  DetectorKind detector = DetectorKind::kSphere;
  bool mmse_priors = true;
  double lambda = 1000.0;
  double beta_tx = 0.0;
  double beta_rx = 0.0;
  /// Vector uses per channel draw; 0 means one draw per frame.
  int coherence = 0;
  double snr_start = 0.0;
  double snr_stop = 0.0;
  double snr_step = 1.0;
  int max_frames = 1000;
  int max_block_errors = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  int decoder_iterations = 25;
  double decoder_alpha = 0.75;
  /// Vector uses per frame in uncoded (mixed) runs.
  int uncoded_vectors = 150;
  bool timing = true;
  bool progress = true;
  std::string output;

  [[nodiscard]] std::vector<double> snr_grid() const {
    std::vector<double> grid;
    if (!(snr_step > 0.0) || snr_stop < snr_start) return grid;
    const int n = static_cast<int>(std::floor((snr_stop - snr_start) / snr_step + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) grid.push_back(snr_start + i * snr_step);
    return grid;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return kInfinity;
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

inline DetectorKind parse_detector(const std::string& v) {
  if (v == "sd") return DetectorKind::kSphere;
  if (v == "mmse") return DetectorKind::kMmse;
  if (v == "bruteforce") return DetectorKind::kBruteForce;
  throw ConfigError("config: unknown detector '" + v + "' (expected sd, mmse or bruteforce)");
}

}  // namespace detail

/// Applies one `key = value` setting. Relative code paths resolve against `base_dir`.
inline void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value,
                          const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  auto path_value = [&](const std::string& v) {
    const std::filesystem::path p(v);
    return (p.is_absolute() || base_dir.empty() ? p : base_dir / p).string();
  };
  if (key == "pam_bits") {
    cfg.pam_bits = static_cast<int>(parse_int(key, value));
  } else if (key == "tx_antennas") {
    cfg.tx = static_cast<int>(parse_int(key, value));
  } else if (key == "rx_antennas") {
    cfg.rx = static_cast<int>(parse_int(key, value));
  } else if (key == "scenario") {
    cfg.scenario = value;
  } else if (key == "layer_shaping") {
    cfg.layer_shaping.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.layer_shaping.push_back(parse_bool(key, trim(item)) ? 1 : 0);
  } else if (key == "code_uniform") {
    cfg.code_uniform = path_value(value);
  } else if (key == "code_ps") {
    cfg.code_ps = path_value(value);
  } else if (key == "nu") {
    cfg.nu = parse_double(key, value);
  } else if (key == "target_rate") {
    cfg.target_rate = parse_double(key, value);
  } else if (key == "detector") {
    cfg.detector = parse_detector(value);
  } else if (key == "mmse_priors") {
    cfg.mmse_priors = parse_bool(key, value);
  } else if (key == "lambda") {
    cfg.lambda = parse_double(key, value);
  } else if (key == "beta_tx") {
    cfg.beta_tx = parse_double(key, value);
  } else if (key == "beta_rx") {
    cfg.beta_rx = parse_double(key, value);
  } else if (key == "coherence") {
    cfg.coherence = static_cast<int>(parse_int(key, value));
  } else if (key == "snr_start") {
    cfg.snr_start = parse_double(key, value);
  } else if (key == "snr_stop") {
    cfg.snr_stop = parse_double(key, value);
  } else if (key == "snr_step") {
    cfg.snr_step = parse_double(key, value);
  } else if (key == "max_frames") {
    cfg.max_frames = static_cast<int>(parse_int(key, value));
  } else if (key == "max_block_errors") {
    cfg.max_block_errors = static_cast<int>(parse_int(key, value));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "workers") {
    cfg.workers = static_cast<int>(parse_int(key, value));
  } else if (key == "decoder_iterations") {
    cfg.decoder_iterations = static_cast<int>(parse_int(key, value));
  } else if (key == "decoder_alpha") {
    cfg.decoder_alpha = parse_double(key, value);
  } else if (key == "uncoded_vectors") {
    cfg.uncoded_vectors = static_cast<int>(parse_int(key, value));
  } else if (key == "timing") {
    cfg.timing = parse_bool(key, value);
  } else if (key == "progress") {
    cfg.progress = parse_bool(key, value);
  } else if (key == "output") {
    cfg.output = value;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

/// Parses flat `key = value` text; `#` starts a comment.
inline ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), base_dir);
  }
  return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

inline ParityCheckCode load_code_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read code file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return load_alist(ss.str());
  } catch (const std::exception& e) {
    throw ConfigError("code file '" + path + "': " + e.what());
  }
}

struct SweepRecord {
  std::string scenario;
  double snr_db = 0.0;
  std::int64_t frames = 0;
  std::int64_t bit_errors = 0;
  std::int64_t block_errors = 0;
  std::int64_t bits_per_frame = 0;
  double ber = 0.0;
  double bler = 0.0;
  double mean_nodes = 0.0;
  std::vector<std::int64_t> layer_bit_errors;
  std::vector<std::int64_t> layer_bits;
  double wall_time = 0.0;

  [[nodiscard]] std::optional<double> layer_ber(int j) const {
    if (j >= static_cast<int>(layer_bits.size()) || layer_bits[j] == 0) return std::nullopt;
    return static_cast<double>(layer_bit_errors[j]) / static_cast<double>(layer_bits[j]);
  }
};

/// A fully resolved link: either coded (one constellation, a code and a frame
/// plan) or uncoded with per-layer constellations.
struct Link {
  std::string name;
  bool coded = true;
  ParityCheckCode code;
  PasFramePlan plan;
  std::vector<ShapedConstellation> layers;
  /// Per layer matcher for uncoded shaped layers.
  std::vector<std::optional<CcdmSpec>> layer_ccdm;
  int vectors_per_frame = 0;

  [[nodiscard]] std::int64_t data_bits_per_frame() const {
    if (coded) return plan.data_bits();
    std::int64_t total = 0;
    for (const auto& c : layers) total += static_cast<std::int64_t>(c.bits_per_symbol()) * vectors_per_frame;
    return total;
  }

  /// Data bits per channel use of one transmit antenna.
  [[nodiscard]] double spectral_efficiency() const {
    return static_cast<double>(data_bits_per_frame()) / (static_cast<double>(vectors_per_frame) * layers.size());
  }
};

namespace detail {

inline double resolve_nu(const ScenarioConfig& cfg) {
  if (cfg.nu) return *cfg.nu;
  if (cfg.target_rate) return nu_for_rate(*cfg.target_rate, cfg.pam_bits);
  throw ConfigError("shaped scenario needs 'nu' or 'target_rate'");
}

inline void validate_common(const ScenarioConfig& cfg) {
  if (cfg.pam_bits < 1 || cfg.pam_bits > 6) throw ConfigError("pam_bits must be in [1, 6]");
  if (cfg.tx < 1 || cfg.rx < cfg.tx) throw ConfigError("need 1 <= tx_antennas <= rx_antennas");
  if (!(cfg.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(cfg.beta_tx >= 0.0 && cfg.beta_tx < 1.0) || !(cfg.beta_rx >= 0.0 && cfg.beta_rx < 1.0)) {
    throw ConfigError("beta_tx and beta_rx must lie in [0, 1)");
  }
  if (cfg.coherence < 0) throw ConfigError("coherence must be >= 0");
  if (cfg.max_frames < 1 || cfg.max_block_errors < 1) throw ConfigError("max_frames and max_block_errors must be >= 1");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.decoder_iterations < 1 || !(cfg.decoder_alpha > 0.0 && cfg.decoder_alpha <= 1.0)) {
    throw ConfigError("decoder_iterations must be >= 1 and decoder_alpha in (0, 1]");
  }
}

}  // namespace detail

/// Coded link for scenario "uniform" or "ps".
inline Link make_coded_link(const ScenarioConfig& cfg, bool shaped) {
  detail::validate_common(cfg);
  Link link;
  link.name = shaped ? "ps" : "uniform";
  const std::string& path = shaped ? cfg.code_ps : cfg.code_uniform;
  if (path.empty()) throw ConfigError(std::string("missing ") + (shaped ? "code_ps" : "code_uniform"));
  link.code = load_code_file(path);
  const double nu = shaped ? detail::resolve_nu(cfg) : 0.0;
  const ShapedConstellation cons = make_constellation(cfg.pam_bits, nu);
  try {
    link.plan = plan_frame(link.code.n(), link.code.k(), cfg.pam_bits, shaped ? &cons.dist : nullptr);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("frame plan: ") + e.what());
  }
  if (link.plan.n_sym % cfg.tx != 0) {
    throw ConfigError("symbols per codeword (" + std::to_string(link.plan.n_sym) +
                      ") not divisible by tx_antennas");
  }
  link.layers.assign(cfg.tx, cons);
  link.vectors_per_frame = link.plan.n_sym / cfg.tx;
  return link;
}

/// Uncoded link with per-layer shaping flags; shaped layers use constant-composition amplitudes.
inline Link make_uncoded_link(const ScenarioConfig& cfg, const std::vector<int>& shaping) {
  detail::validate_common(cfg);
  if (static_cast<int>(shaping.size()) != cfg.tx) throw ConfigError("layer_shaping needs one flag per tx antenna");
  if (cfg.uncoded_vectors < 1) throw ConfigError("uncoded_vectors must be >= 1");
  Link link;
  link.coded = false;
  for (int f : shaping) link.name += (link.name.empty() ? "" : "_") + std::string(f ? "ps" : "qam");
  link.vectors_per_frame = cfg.uncoded_vectors;
  const bool any_shaped = std::find(shaping.begin(), shaping.end(), 1) != shaping.end();
  const double nu = any_shaped ? detail::resolve_nu(cfg) : 0.0;
  for (int f : shaping) {
    link.layers.push_back(make_constellation(cfg.pam_bits, f ? nu : 0.0));
    if (f && cfg.pam_bits > 1) {
      link.layer_ccdm.push_back(build_composition(link.layers.back().dist, 2 * cfg.uncoded_vectors));
    } else {
      link.layer_ccdm.emplace_back();
    }
  }
  return link;
}

/// Refuses comparisons whose data bits per channel use differ by more than 1%.
inline void check_spectral_match(const Link& a, const Link& b) {
  const double sa = a.spectral_efficiency();
  const double sb = b.spectral_efficiency();
  if (std::abs(sa - sb) > 0.01 * std::max(sa, sb)) {
    std::ostringstream msg;
    msg << "spectral efficiency mismatch: " << a.name << " " << sa << " vs " << b.name << " " << sb
        << " bits per channel use";
    throw ConfigError(msg.str());
  }
}

namespace detail {

struct FrameResult {
  std::int64_t bit_errors = 0;
  bool block_error = false;
  std::int64_t nodes = 0;
  std::int64_t detections = 0;
  std::vector<std::int64_t> layer_bit_errors;
  std::vector<std::int64_t> layer_bits;
};

using DetectFn = std::function<DetectionOutput(const CVector&)>;

inline DetectFn make_detector(const ScenarioConfig& cfg, const CMatrix& h, double sigma2,
                              const std::vector<ShapedConstellation>& layers) {
  switch (cfg.detector) {
    case DetectorKind::kSphere: {
      auto sd = std::make_shared<SoftSphereDetector>(h, sigma2, layers, cfg.lambda, true);
      return [sd](const CVector& y) { return sd->detect(y); };
    }
    case DetectorKind::kMmse:
      return [&cfg, h, sigma2, &layers](const CVector& y) { return mmse_soft(y, h, sigma2, layers, cfg.mmse_priors); };
    case DetectorKind::kBruteForce:
      return [h, sigma2, &layers](const CVector& y) { return bruteforce_maxlog(y, h, sigma2, layers, true); };
  }
  throw std::logic_error("unknown detector");
}

inline Bits random_bits(Rng& rng, std::size_t n) {
  Bits b(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = rng();
    b[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return b;
}

/// Channel draws and noise use separate streams that do not depend on the
/// scenario, so compared scenarios see identical channel realizations.
inline FrameResult simulate_frame(const ScenarioConfig& cfg, const Link& link, double sigma2, std::uint64_t snr_index,
                                  std::uint64_t frame) {
  Rng data_rng = make_rng(cfg.seed, {snr_index, frame, 1});
  Rng chan_rng = make_rng(cfg.seed, {snr_index, frame, 2});
  Rng noise_rng = make_rng(cfg.seed, {snr_index, frame, 3});
  const CorrelatedRayleigh fading(cfg.tx, cfg.rx, {cfg.beta_tx, cfg.beta_rx});

  const int tx = cfg.tx;
  const int nvec = link.vectors_per_frame;
  const int block = cfg.coherence == 0 ? nvec : cfg.coherence;

  // Transmit symbols (layer-minor) and, for uncoded links, their label indices.
  std::vector<cplx> symbols;
  std::vector<int> points;
  Bits data;
  if (link.coded) {
    data = random_bits(data_rng, static_cast<std::size_t>(link.plan.data_bits()));
    symbols = pas_encode(link.plan, link.code, link.layers[0], data);
  } else {
    symbols.resize(static_cast<std::size_t>(nvec) * tx);
    points.resize(symbols.size());
    for (int j = 0; j < tx; ++j) {
      const ShapedConstellation& c = link.layers[j];
      std::vector<int> amps(2 * nvec);
      if (link.layer_ccdm[j]) {
        amps = ccdm_match(*link.layer_ccdm[j], random_bits(data_rng, link.layer_ccdm[j]->k_in));
      } else {
        std::uniform_int_distribution<int> pick(0, c.pam.amplitude_count() - 1);
        for (int& a : amps) a = pick(data_rng);
      }
      const Bits signs = random_bits(data_rng, amps.size());
      for (int v = 0; v < nvec; ++v) {
        const int kr = c.pam.point_index(signs[2 * v], amps[2 * v]);
        const int ki = c.pam.point_index(signs[2 * v + 1], amps[2 * v + 1]);
        const int q = c.qam_index(kr, ki);
        points[static_cast<std::size_t>(v) * tx + j] = q;
        symbols[static_cast<std::size_t>(v) * tx + j] = c.points[q];
      }
    }
  }

  FrameResult fr;
  fr.layer_bit_errors.assign(tx, 0);
  fr.layer_bits.assign(tx, 0);
  std::vector<double> symbol_llrs;
  if (link.coded) symbol_llrs.resize(static_cast<std::size_t>(link.plan.n));

  CMatrix h;
  DetectFn detect;
  CVector s(tx);
  for (int v = 0; v < nvec; ++v) {
    if (v % block == 0) {
      h = fading.draw(chan_rng);
      detect = make_detector(cfg, h, sigma2, link.layers);
    }
    for (int j = 0; j < tx; ++j) s(j) = symbols[static_cast<std::size_t>(v) * tx + j];
    const CVector y = transmit(noise_rng, h, s, sigma2);
    const DetectionOutput out = detect(y);
    fr.nodes += out.nodes_visited;
    ++fr.detections;
    if (link.coded) {
      const int nb = link.layers[0].bits_per_symbol();
      for (int j = 0; j < tx; ++j) {
        std::copy_n(out.llrs.begin() + out.bit_offset[j], nb,
                    symbol_llrs.begin() + (static_cast<std::ptrdiff_t>(v) * tx + j) * nb);
      }
    } else {
      for (int j = 0; j < tx; ++j) {
        const ShapedConstellation& c = link.layers[j];
        const std::uint32_t diff = c.labels[points[static_cast<std::size_t>(v) * tx + j]] ^ c.labels[out.s_ml[j]];
        const int errs = std::popcount(diff);
        fr.layer_bit_errors[j] += errs;
        fr.layer_bits[j] += c.bits_per_symbol();
        fr.bit_errors += errs;
      }
    }
  }

  if (link.coded) {
    const auto dec = pas_decode(link.plan, link.code, link.layers[0], link.plan.to_codeword_order(symbol_llrs),
                                cfg.decoder_iterations, cfg.decoder_alpha);
    if (dec.dematched) {
      for (std::size_t i = 0; i < data.size(); ++i) fr.bit_errors += dec.data[i] != data[i];
    } else {
      // The shaped bits are unrecoverable; charge half of them as errors.
      const int shaped = link.plan.shaped_data_bits();
      fr.bit_errors += (shaped + 1) / 2;
      for (std::size_t i = shaped; i < data.size(); ++i) fr.bit_errors += dec.data[i - shaped] != data[i];
    }
    fr.block_error = !dec.decode_ok || fr.bit_errors > 0;
  } else {
    fr.block_error = fr.bit_errors > 0;
  }
  return fr;
}

}  // namespace detail

/// Simulates one SNR point. Frames run in fixed-size chunks across workers and
/// are accumulated in frame order, so the stop point and every statistic are
/// independent of the worker count.
inline SweepRecord run_point(const ScenarioConfig& cfg, const Link& link, double snr_db, std::uint64_t snr_index) {
  const auto t0 = std::chrono::steady_clock::now();
  const double sigma2 = sigma2_from_snr_db(snr_db, cfg.tx);
  SweepRecord rec;
  rec.scenario = link.name;
  rec.snr_db = snr_db;
  rec.bits_per_frame = link.data_bits_per_frame();
  rec.layer_bit_errors.assign(cfg.tx, 0);
  rec.layer_bits.assign(cfg.tx, 0);

  constexpr int kChunk = 32;
  std::int64_t nodes = 0;
  std::int64_t detections = 0;
  bool done = false;
  std::vector<detail::FrameResult> results;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int base = 0; base < cfg.max_frames && !done; base += kChunk) {
    const int count = std::min(kChunk, cfg.max_frames - base);
    results.assign(count, {});
    std::atomic<int> next{0};
    auto work = [&] {
      try {
        for (int i = next++; i < count; i = next++) {
          results[i] = detail::simulate_frame(cfg, link, sigma2, snr_index, static_cast<std::uint64_t>(base + i));
        }
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    };
    const int nthreads = std::min(cfg.workers, count);
    if (nthreads <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    for (const auto& fr : results) {
      ++rec.frames;
      rec.bit_errors += fr.bit_errors;
      rec.block_errors += fr.block_error ? 1 : 0;
      nodes += fr.nodes;
      detections += fr.detections;
      for (int j = 0; j < cfg.tx; ++j) {
        rec.layer_bit_errors[j] += fr.layer_bit_errors[j];
        rec.layer_bits[j] += fr.layer_bits[j];
      }
      if (rec.block_errors >= cfg.max_block_errors) {
        done = true;
        break;
      }
    }
  }
  rec.ber = static_cast<double>(rec.bit_errors) / static_cast<double>(rec.frames * rec.bits_per_frame);
  rec.bler = static_cast<double>(rec.block_errors) / static_cast<double>(rec.frames);
  rec.mean_nodes = detections > 0 ? static_cast<double>(nodes) / static_cast<double>(detections) : 0.0;
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (cfg.progress) {
    std::fprintf(stderr, "[%s] snr=%.2f dB frames=%lld bler=%.4g ber=%.4g nodes=%.1f (%.1fs)\n", rec.scenario.c_str(),
                 snr_db, static_cast<long long>(rec.frames), rec.bler, rec.ber, rec.mean_nodes, rec.wall_time);
  }
  return rec;
}

/// Runs the three uncoded layer-shaping patterns (PS,PS), (PS,QAM), (QAM,QAM) of a two-layer system.
inline std::vector<SweepRecord> run_mixed_layers(const ScenarioConfig& cfg) {
  if (cfg.tx != 2) throw ConfigError("mixed scenario requires tx_antennas = 2");
  const std::vector<Link> links = {make_uncoded_link(cfg, {1, 1}), make_uncoded_link(cfg, {1, 0}),
                                   make_uncoded_link(cfg, {0, 0})};
  std::vector<SweepRecord> out;
  const auto grid = cfg.snr_grid();
  for (const auto& link : links) {
    for (std::size_t i = 0; i < grid.size(); ++i) out.push_back(run_point(cfg, link, grid[i], i));
  }
  return out;
}

/// Resolves the links a configuration simulates, validating everything up front.
inline std::vector<Link> make_links(const ScenarioConfig& cfg) {
  if (cfg.scenario == "uniform") return {make_coded_link(cfg, false)};
  if (cfg.scenario == "ps") return {make_coded_link(cfg, true)};
  if (cfg.scenario == "compare") {
    std::vector<Link> links = {make_coded_link(cfg, false), make_coded_link(cfg, true)};
    check_spectral_match(links[0], links[1]);
    return links;
  }
  if (cfg.scenario == "mixed") {
    if (cfg.tx != 2) throw ConfigError("mixed scenario requires tx_antennas = 2");
    return {make_uncoded_link(cfg, {1, 1}), make_uncoded_link(cfg, {1, 0}), make_uncoded_link(cfg, {0, 0})};
  }
  if (cfg.scenario == "layers") {
    if (cfg.layer_shaping.empty()) throw ConfigError("scenario 'layers' needs layer_shaping");
    return {make_uncoded_link(cfg, cfg.layer_shaping)};
  }
  throw ConfigError("unknown scenario '" + cfg.scenario + "' (expected uniform, ps, compare, mixed or layers)");
}

inline constexpr const char* kCsvHeader =
    "scenario,snr_db,frames,bit_errors,block_errors,ber,bler,mean_nodes,layer_ber_0,layer_ber_1,wall_time_s";

inline std::string csv_row(const SweepRecord& r, bool timing) {
  char buf[512];
  auto layer = [&](int j) -> std::string {
    const auto v = r.layer_ber(j);
    if (!v) return {};
    char b[64];
    std::snprintf(b, sizeof b, "%.9g", *v);
    return b;
  };
  std::string wall;
  if (timing) {
    char b[64];
    std::snprintf(b, sizeof b, "%.3f", r.wall_time);
    wall = b;
  }
  std::snprintf(buf, sizeof buf, "%s,%.6g,%lld,%lld,%lld,%.9g,%.9g,%.9g,%s,%s,%s", r.scenario.c_str(), r.snr_db,
                static_cast<long long>(r.frames), static_cast<long long>(r.bit_errors),
                static_cast<long long>(r.block_errors), r.ber, r.bler, r.mean_nodes, layer(0).c_str(),
                layer(1).c_str(), wall.c_str());
  return buf;
}

inline void write_csv(std::ostream& out, const std::vector<SweepRecord>& records, bool timing) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) out << csv_row(r, timing) << '\n';
}

/// Runs every configured scenario over the SNR grid and writes the CSV to
/// `cfg.output` when set. Per-layer BER columns are filled for uncoded runs only.
inline std::vector<SweepRecord> run_sweep(const ScenarioConfig& cfg) {
  const std::vector<Link> links = make_links(cfg);
  std::ofstream file;
  if (!cfg.output.empty()) {
    file.open(cfg.output, std::ios::out | std::ios::trunc);
    if (!file) throw ConfigError("cannot write output file '" + cfg.output + "'");
  }
  std::vector<SweepRecord> records;
  const auto grid = cfg.snr_grid();
  for (const auto& link : links) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      SweepRecord r = run_point(cfg, link, grid[i], i);
      if (link.coded) {
        r.layer_bit_errors.clear();
        r.layer_bits.clear();
      }
      records.push_back(std::move(r));
    }
  }
  if (file.is_open()) {
    write_csv(file, records, cfg.timing);
    if (!file) throw std::runtime_error("failed writing '" + cfg.output + "'");
  }
  return records;
}

}  // namespace pasmimo
