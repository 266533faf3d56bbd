#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace singleworld {

/// Base class of every error raised by the library. The CLI maps all of
/// these to exit code 2 except NotIdentified.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class CyclicGraph : public Error {
 public:
  using Error::Error;
};

class InvalidOrder : public Error {
 public:
  using Error::Error;
};

class UnknownVertex : public Error {
 public:
  using Error::Error;
};

class UnknownNode : public Error {
 public:
  using Error::Error;
};

class NotATarget : public Error {
 public:
  using Error::Error;
};

class UnknownVariable : public Error {
 public:
  using Error::Error;
};

class InvalidQuery : public Error {
 public:
  using Error::Error;
};

class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

class CellBoundExceeded : public Error {
 public:
  using Error::Error;
};

class IncompleteFamily : public Error {
 public:
  using Error::Error;
};

class IncompleteKernel : public Error {
 public:
  using Error::Error;
};

/// A g-formula factor was needed whose conditioning cell has probability
/// zero. Carries the vertex and the conditioning cell.
class NotIdentified : public Error {
 public:
  NotIdentified(std::string vertex, std::map<std::string, int> cell, const std::string& message)
      : Error(message), vertex_(std::move(vertex)), cell_(std::move(cell)) {}

  const std::string& vertex() const { return vertex_; }
  const std::map<std::string, int>& cell() const { return cell_; }

 private:
  std::string vertex_;
  std::map<std::string, int> cell_;
};

class NotConvertible : public Error {
 public:
  using Error::Error;
};

class IllFormedEci : public Error {
 public:
  using Error::Error;
};

class NotACounterexample : public Error {
 public:
  using Error::Error;
};

class NoIdleRegime : public Error {
 public:
  using Error::Error;
};

/// Raised when a checker's documented precondition is not met by its
/// arguments (overlapping sets, empty outcome set, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace singleworld
