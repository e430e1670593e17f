#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace semae {

// Row-major throughout so rows map to contiguous spans and checkpoints
// serialize in the natural order.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; message names the offending line.
class ParseError : public Error {
 public:
  using Error::Error;
};

class DuplicateKeyError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf during training or a fatal non-convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

struct SentenceKey {
  std::string entity_id;
  std::string review_id;
  std::size_t sentence_idx = 0;

  auto operator<=>(const SentenceKey&) const = default;
  bool operator==(const SentenceKey&) const = default;

  std::string str() const {
    return entity_id + "/" + review_id + "/" + std::to_string(sentence_idx);
  }
};

}  // namespace semae
