// SPDX-License-Identifier: Apache-2.0
//
// Progressive edge-growth construction of regular-column-weight LDPC
// parity-check matrices, written as alist. Used offline to produce the codes
// under data/codes.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <queue>
#include <random>
#include <vector>

#include "pasmimo/ldpc.hpp"

namespace {

pasmimo::SparseBinaryMatrix peg(int n, int m, int col_degree, std::mt19937_64& rng) {
  std::vector<std::vector<int>> var_checks(n), check_vars(m);
  std::vector<int> depth_of(m);
  std::vector<int> var_seen(n);

  auto lowest_degree = [&](const std::vector<int>& pool) {
    int best_deg = 1 << 30;
    std::vector<int> ties;
    for (int c : pool) {
      const int d = static_cast<int>(check_vars[c].size());
      if (d < best_deg) {
        best_deg = d;
        ties.clear();
      }
      if (d == best_deg) ties.push_back(c);
    }
    return ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
  };

  std::vector<int> all_checks(m);
  for (int c = 0; c < m; ++c) all_checks[c] = c;

  for (int v = 0; v < n; ++v) {
    for (int k = 0; k < col_degree; ++k) {
      if (k == 0) {
        const int c = lowest_degree(all_checks);
        var_checks[v].push_back(c);
        check_vars[c].push_back(v);
        continue;
      }
      // Breadth-first expansion from v; prefer checks outside the reachable set,
      // otherwise those reached last.
      std::fill(depth_of.begin(), depth_of.end(), -1);
      std::fill(var_seen.begin(), var_seen.end(), 0);
      std::queue<int> frontier;
      var_seen[v] = 1;
      for (int c : var_checks[v]) {
        depth_of[c] = 0;
        frontier.push(c);
      }
      int max_depth = 0;
      while (!frontier.empty()) {
        const int c = frontier.front();
        frontier.pop();
        max_depth = std::max(max_depth, depth_of[c]);
        for (int u : check_vars[c]) {
          if (var_seen[u]) continue;
          var_seen[u] = 1;
          for (int c2 : var_checks[u]) {
            if (depth_of[c2] < 0) {
              depth_of[c2] = depth_of[c] + 1;
              frontier.push(c2);
            }
          }
        }
      }
      std::vector<int> pool;
      for (int c = 0; c < m; ++c) {
        if (depth_of[c] < 0) pool.push_back(c);
      }
      if (pool.empty()) {
        for (int c = 0; c < m; ++c) {
          if (depth_of[c] == max_depth &&
              std::find(var_checks[v].begin(), var_checks[v].end(), c) == var_checks[v].end()) {
            pool.push_back(c);
          }
        }
      }
      const int c = lowest_degree(pool);
      var_checks[v].push_back(c);
      check_vars[c].push_back(v);
    }
  }
  pasmimo::SparseBinaryMatrix h;
  h.rows = m;
  h.cols = n;
  h.row_cols = check_vars;
  for (auto& r : h.row_cols) std::sort(r.begin(), r.end());
  return h;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PEG LDPC parity-check matrix generator"};
  int n = 0;
  int k = 0;
  int col_degree = 3;
  std::uint64_t seed = 1;
  std::string output;
  app.add_option("-n,--length", n, "codeword length")->required();
  app.add_option("-k,--dimension", k, "code dimension")->required();
  app.add_option("-d,--col-degree", col_degree, "variable node degree");
  app.add_option("-s,--seed", seed, "random seed");
  app.add_option("-o,--output", output, "output alist path")->required();
  CLI11_PARSE(app, argc, argv);

  const int m = n - k;
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 rng(seed + attempt);
    const auto h = peg(n, m, col_degree, rng);
    try {
      const pasmimo::ParityCheckCode code(h);
      std::ofstream out(output);
      out << pasmimo::write_alist(h);
      std::fprintf(stderr, "wrote (%d,%d) code with seed %llu\n", code.n(), code.k(),
                   static_cast<unsigned long long>(seed + attempt));
      return out ? 0 : 1;
    } catch (const pasmimo::RankDeficientError& e) {
      std::fprintf(stderr, "seed %llu: %s, retrying\n", static_cast<unsigned long long>(seed + attempt), e.what());
    }
  }
  return 1;
}
