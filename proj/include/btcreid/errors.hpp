#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace btcreid {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A ledger record that does not follow the JSON-lines schema.
class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A non-coinbase transaction whose inputs do not equal outputs plus fee.
class ConservationViolation : public Error {
 public:
  explicit ConservationViolation(std::size_t index)
      : Error("transaction " + std::to_string(index) +
              ": input sum differs from output sum plus fee"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// An input address that no earlier transaction emitted.
class DanglingInput : public Error {
 public:
  DanglingInput(std::size_t index, const std::string& address)
      : Error("transaction " + std::to_string(index) + ": input address '" +
              address + "' was never emitted by an earlier transaction"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class InvalidPartition : public Error {
 public:
  using Error::Error;
};

class EmptyGraph : public Error {
 public:
  EmptyGraph() : Error("graph has no edges (total weight is zero)") {}
};

class LevelOutOfRange : public Error {
 public:
  LevelOutOfRange(std::size_t level, std::size_t depth)
      : Error("level " + std::to_string(level) + " is out of range; dendrogram has " +
              std::to_string(depth) + " level(s)"),
        level_(level),
        depth_(depth) {}
  std::size_t level() const noexcept { return level_; }
  std::size_t depth() const noexcept { return depth_; }

 private:
  std::size_t level_;
  std::size_t depth_;
};

/// Two partitions compared over different element sets.
class UniverseMismatch : public Error {
 public:
  explicit UniverseMismatch(std::vector<std::string> difference);
  /// Symmetric difference of the two universes, sorted.
  const std::vector<std::string>& difference() const noexcept { return difference_; }

 private:
  std::vector<std::string> difference_;
};

class EmptyOverlap : public Error {
 public:
  EmptyOverlap() : Error("no ground-truth address appears in the predicted partition") {}
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

class InfeasibleConfig : public Error {
 public:
  using Error::Error;
};

}  // namespace btcreid
