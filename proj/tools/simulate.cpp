// SPDX-License-Identifier: Apache-2.0
//
// simulate --config <path> [overrides]: Monte-Carlo SNR sweep writing CSV.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "pasmimo/sim.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Link-level simulation of probabilistically shaped MIMO transmission"};
  std::string config_path;
  std::optional<double> snr_start, snr_stop, snr_step, lambda, beta_rx;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, max_frames;
  std::optional<std::string> detector, scenario, output;
  bool no_timing = false;
  bool quiet = false;

  app.add_option("--config", config_path, "scenario configuration file")->required();
  app.add_option("--snr-start", snr_start, "first SNR point in dB");
  app.add_option("--snr-stop", snr_stop, "last SNR point in dB");
  app.add_option("--snr-step", snr_step, "SNR step in dB");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--detector", detector, "sd | mmse | bruteforce");
  app.add_option("--scenario", scenario, "uniform | ps | compare | mixed | layers");
  app.add_option("--output", output, "CSV output path");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--max-frames", max_frames, "frame budget per SNR point");
  app.add_option("--lambda", lambda, "LLR clipping value");
  app.add_option("--beta-rx", beta_rx, "receive correlation parameter");
  app.add_flag("--no-timing", no_timing, "leave wall_time_s empty (byte-stable output)");
  app.add_flag("--quiet", quiet, "suppress progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    pasmimo::ScenarioConfig cfg = pasmimo::load_config(config_path);
    if (snr_start) cfg.snr_start = *snr_start;
    if (snr_stop) cfg.snr_stop = *snr_stop;
    if (snr_step) cfg.snr_step = *snr_step;
    if (seed) cfg.seed = *seed;
    if (detector) pasmimo::apply_setting(cfg, "detector", *detector);
    if (scenario) cfg.scenario = *scenario;
    if (output) cfg.output = *output;
    if (workers) cfg.workers = *workers;
    if (max_frames) cfg.max_frames = *max_frames;
    if (lambda) cfg.lambda = *lambda;
    if (beta_rx) cfg.beta_rx = *beta_rx;
    if (no_timing) cfg.timing = false;
    if (quiet) cfg.progress = false;

    const auto records = pasmimo::run_sweep(cfg);
    if (cfg.output.empty()) pasmimo::write_csv(std::cout, records, cfg.timing);
  } catch (const pasmimo::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
