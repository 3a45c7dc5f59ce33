#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <vector>

#include "kotrie/bench.hpp"

int main(int argc, char **argv) {
  namespace b = kotrie::bench;
  CLI::App app{"Throughput benchmark for concurrent ordered sets"};

  std::string structure = "kotrie";
  std::string mix = "1:1:1:1";
  std::string pin = "none";
  std::string out = "resultData.csv";
  b::ExperimentConfig config;

  app.add_option("--structure", structure, "kotrie, skiplist or augtrie")
      ->check(CLI::IsMember({"kotrie", "skiplist", "augtrie"}));
  app.add_option("--k", config.k, "Universe is {0..2^k-1}")->check(CLI::Range(1, 24));
  app.add_option("--threads", config.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seconds", config.seconds, "Timed duration per trial")
      ->check(CLI::PositiveNumber);
  app.add_option("--mix", mix, "Weights I:R:S:P for insert, remove, search, predecessor");
  app.add_option("--pin", pin, "compact, even or none")
      ->check(CLI::IsMember({"compact", "even", "none"}));
  app.add_option("--seed", config.seed, "Base seed");
  app.add_option("--trials", config.trials, "Number of trials")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "CSV file to append to");
  CLI11_PARSE(app, argc, argv);

  try {
    config.structure = b::parse_structure(structure);
    config.mix = b::parse_mix(mix);
    config.pin = b::parse_pinning(pin);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  std::vector<b::RunResult> results;
  for (unsigned t = 0; t < config.trials; ++t) {
    b::RunResult r = b::run_trial(config, t);
    std::printf("%s trial %u: %llu ops in %.3f s (%llu prefilled, %zu at end)\n",
                structure.c_str(), t, static_cast<unsigned long long>(r.throughput),
                config.seconds, static_cast<unsigned long long>(r.prefill_size), r.final_size);
    if (!r.structure_ok) {
      std::cerr << "error: structure check failed: " << r.structure_message << '\n';
      return 1;
    }
    results.push_back(std::move(r));
  }
  try {
    b::append_csv(out, results);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
