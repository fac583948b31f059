// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pasmimo/sim.hpp"

using namespace pasmimo;

namespace {

ScenarioConfig small_compare() {
  ScenarioConfig cfg = parse_config(
      "pam_bits = 2\n"
      "scenario = compare\n"
      "code_uniform = codes/peg_1200_800.alist\n"
      "code_ps = codes/peg_1200_1056.alist   # shaped\n"
      "nu = 0.2268\n"
      "snr_start = 9\n"
      "snr_stop = 11\n"
      "snr_step = 1\n"
      "max_frames = 40\n"
      "max_block_errors = 10\n"
      "seed = 3\n"
      "timing = false\n"
      "progress = false\n",
      PASMIMO_DATA_DIR);
  return cfg;
}

std::string to_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  write_csv(out, records, false);
  return out.str();
}

}  // namespace

TEST(Config, ParsesKeysAndResolvesPaths) {
  const auto cfg = parse_config(
      "# comment line\n"
      "tx_antennas = 3\n"
      "rx_antennas = 4\n"
      "code_ps = codes/x.alist\n"
      "lambda = inf\n"
      "detector = mmse\n"
      "mmse_priors = false\n"
      "layer_shaping = 1, 0, 1\n"
      "beta_rx = 0.3874\n",
      "/base");
  EXPECT_EQ(cfg.tx, 3);
  EXPECT_EQ(cfg.rx, 4);
  EXPECT_EQ(cfg.code_ps, "/base/codes/x.alist");
  EXPECT_TRUE(std::isinf(cfg.lambda));
  EXPECT_EQ(cfg.detector, DetectorKind::kMmse);
  EXPECT_FALSE(cfg.mmse_priors);
  EXPECT_EQ(cfg.layer_shaping, (std::vector<int>{1, 0, 1}));
  EXPECT_DOUBLE_EQ(cfg.beta_rx, 0.3874);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("no_such_key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("pam_bits = two\n"), ConfigError);
  EXPECT_THROW(parse_config("pam_bits\n"), ConfigError);
  EXPECT_THROW(parse_config("detector = zf\n"), ConfigError);
  EXPECT_THROW(parse_config("timing = maybe\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/path.cfg"), ConfigError);
}

TEST(Config, SnrGrid) {
  ScenarioConfig cfg;
  cfg.snr_start = 1.0;
  cfg.snr_stop = 2.0;
  cfg.snr_step = 0.25;
  EXPECT_EQ(cfg.snr_grid(), (std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0}));
  cfg.snr_stop = 0.5;
  EXPECT_TRUE(cfg.snr_grid().empty());
}

TEST(Links, ValidationErrors) {
  auto cfg = small_compare();
  cfg.code_ps = PASMIMO_DATA_DIR "/codes/missing.alist";
  EXPECT_THROW(make_links(cfg), ConfigError);

  cfg = small_compare();
  cfg.nu.reset();
  EXPECT_THROW(make_links(cfg), ConfigError);

  cfg = small_compare();
  cfg.scenario = "bogus";
  EXPECT_THROW(make_links(cfg), ConfigError);

  cfg = small_compare();
  cfg.tx = 3;
  cfg.rx = 3;
  cfg.scenario = "mixed";
  EXPECT_THROW(make_links(cfg), ConfigError);

  cfg = small_compare();
  cfg.rx = 1;
  EXPECT_THROW(make_links(cfg), ConfigError);
}

TEST(Links, SpectralMatch) {
  auto cfg = small_compare();
  const auto links = make_links(cfg);
  ASSERT_EQ(links.size(), 2u);
  EXPECT_EQ(links[0].data_bits_per_frame(), 800);
  EXPECT_EQ(links[1].data_bits_per_frame(), 346 + 456);
  // A much stronger shaping parameter breaks the rate match and is refused.
  cfg.nu = 1.0;
  EXPECT_THROW(make_links(cfg), ConfigError);
}

TEST(Links, TargetRateResolvesNu) {
  auto cfg = small_compare();
  cfg.nu.reset();
  cfg.target_rate = 0.58;
  const auto link = make_coded_link(cfg, true);
  EXPECT_NEAR(link.layers[0].dist.entropy(), 0.58, 1e-6);
}

TEST(Sweep, EmptyGridWritesHeaderOnly) {
  auto cfg = small_compare();
  cfg.snr_stop = cfg.snr_start - 1.0;
  const auto path = std::filesystem::temp_directory_path() / "pasmimo_empty.csv";
  cfg.output = path.string();
  EXPECT_TRUE(run_sweep(cfg).empty());
  std::ifstream in(path);
  std::string line, rest;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  EXPECT_FALSE(std::getline(in, rest));
}

TEST(Sweep, UnwritableOutput) {
  auto cfg = small_compare();
  cfg.output = "/nonexistent-dir/out.csv";
  EXPECT_THROW(run_sweep(cfg), ConfigError);
}

TEST(Sweep, IdenticalAcrossWorkerCounts) {
  auto cfg = small_compare();
  cfg.max_frames = 70;
  cfg.max_block_errors = 1000;
  cfg.workers = 1;
  const std::string a = to_csv(run_sweep(cfg));
  cfg.workers = 8;
  const std::string b = to_csv(run_sweep(cfg));
  EXPECT_EQ(a, b);
  cfg.seed = 4;
  EXPECT_NE(a, to_csv(run_sweep(cfg)));
}

TEST(Sweep, StopsOnBlockErrors) {
  auto cfg = small_compare();
  cfg.snr_start = cfg.snr_stop = -10.0;
  cfg.max_frames = 1000;
  cfg.max_block_errors = 7;
  for (const auto& r : run_sweep(cfg)) {
    EXPECT_EQ(r.block_errors, 7);
    EXPECT_EQ(r.frames, 7);
    EXPECT_DOUBLE_EQ(r.bler, 1.0);
  }
}

TEST(Sweep, HighSnrIsErrorFree) {
  auto cfg = small_compare();
  cfg.snr_start = cfg.snr_stop = 60.0;
  cfg.max_frames = 20;
  for (const auto& r : run_sweep(cfg)) {
    EXPECT_EQ(r.frames, 20);
    EXPECT_EQ(r.bit_errors, 0);
    EXPECT_EQ(r.block_errors, 0);
    EXPECT_GT(r.mean_nodes, 0.0);
  }
}

TEST(Sweep, CounterConservation) {
  auto cfg = small_compare();
  cfg.snr_start = 4.0;
  cfg.snr_stop = 12.0;
  cfg.snr_step = 4.0;
  for (const auto& r : run_sweep(cfg)) {
    EXPECT_LE(r.bit_errors, r.frames * r.bits_per_frame);
    EXPECT_LE(r.block_errors, r.frames);
    EXPECT_DOUBLE_EQ(r.ber, static_cast<double>(r.bit_errors) / (r.frames * r.bits_per_frame));
    EXPECT_TRUE(r.layer_bits.empty());
  }
}

TEST(Sweep, DetectorsAgreeOnNoiselessLink) {
  auto cfg = small_compare();
  cfg.scenario = "ps";
  cfg.snr_start = cfg.snr_stop = 50.0;
  cfg.max_frames = 5;
  for (auto kind : {DetectorKind::kSphere, DetectorKind::kMmse, DetectorKind::kBruteForce}) {
    cfg.detector = kind;
    const auto recs = run_sweep(cfg);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].bit_errors, 0);
  }
}

TEST(Mixed, PerLayerColumns) {
  auto cfg = small_compare();
  cfg.scenario = "mixed";
  cfg.uncoded_vectors = 50;
  cfg.snr_start = cfg.snr_stop = 10.0;
  cfg.max_frames = 10;
  cfg.max_block_errors = 1000;
  const auto recs = run_sweep(cfg);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].scenario, "ps_ps");
  EXPECT_EQ(recs[1].scenario, "ps_qam");
  EXPECT_EQ(recs[2].scenario, "qam_qam");
  for (const auto& r : recs) {
    ASSERT_EQ(r.layer_bits.size(), 2u);
    EXPECT_EQ(r.layer_bits[0], 10 * 50 * 4);
    EXPECT_EQ(r.layer_bit_errors[0] + r.layer_bit_errors[1], r.bit_errors);
    EXPECT_TRUE(r.layer_ber(0).has_value());
  }
}

TEST(Csv, RowFormat) {
  SweepRecord r;
  r.scenario = "ps";
  r.snr_db = 10.5;
  r.frames = 4;
  r.bit_errors = 3;
  r.block_errors = 1;
  r.ber = 0.125;
  r.bler = 0.25;
  r.mean_nodes = 12.5;
  r.wall_time = 1.23456;
  EXPECT_EQ(csv_row(r, true), "ps,10.5,4,3,1,0.125,0.25,12.5,,,1.235");
  EXPECT_EQ(csv_row(r, false), "ps,10.5,4,3,1,0.125,0.25,12.5,,,");
  r.layer_bit_errors = {1, 2};
  r.layer_bits = {8, 8};
  EXPECT_EQ(csv_row(r, false), "ps,10.5,4,3,1,0.125,0.25,12.5,0.125,0.25,");
}
