#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stnmt {

// Operand shapes disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A precondition of an operation was violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Model/run configuration is inconsistent (e.g. tree coverage on a
// sequential encoder, checkpoint manifest not matching the flags).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tree leaves do not spell the supplied sentence.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Training diverged or hit non-finite values.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stnmt
