#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "semae/model.hpp"
#include "semae/selection.hpp"

namespace semae::cli {

enum class Command { synth, train, summarize, aspect, seeded, eval, inspect, gradcheck };

std::string to_string(Command c);

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumerical = 3 };

struct Paths {
  std::string corpus, embeddings, lexicon, aspects, checkpoint, out;
  std::string dev_corpus, dev_embeddings, seeds, summaries, gold;
  bool operator==(const Paths&) const = default;
};

struct SynthOptions {
  std::size_t entities = 40;
  std::size_t reviews = 10;
  std::size_t sentences = 5;
  std::size_t topics = 8;
  double separation = 10.0;
  double noise = 0.1;
  bool operator==(const SynthOptions&) const = default;
};

struct RunConfig {
  Command command = Command::summarize;
  Paths paths;
  std::string profile = "desk-space";
  int dim = 32;  // featurizer / synth width
  TrainConfig train;
  SelectionConfig select;
  SynthOptions synth;
  std::string aspect;
  std::vector<std::string> multi_aspect;
  int clusters = 12;
  double grad_epsilon = 1e-5;
  std::uint64_t seed = 0;
  bool operator==(const RunConfig&) const = default;
};

// Parses argv (without the program name). `--config <file>` lines of the
// form `key = value` act as flags placed before the command-line ones, so
// explicit flags win. Throws CLI11 errors or ConfigError on bad input.
RunConfig parse_args(const std::vector<std::string>& args);

// Runs one command; prints a one-line JSON completion record to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semae::cli
