#pragma once

#include <stdexcept>
#include <string>

namespace ehflow {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input file / JSON could not be parsed.
struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error("parse error: " + what) {}
};

// The edge set contains a directed cycle.
struct CycleDetected : Error {
  explicit CycleDetected(const std::string& what) : Error("cycle detected: " + what) {}
};

struct MissingSourceOrDestination : Error {
  explicit MissingSourceOrDestination(const std::string& what)
      : Error("missing source or destination: " + what) {}
};

struct NegativePower : Error {
  explicit NegativePower(const std::string& what) : Error("negative power: " + what) {}
};

struct DuplicateEdge : Error {
  explicit DuplicateEdge(const std::string& what) : Error("duplicate edge: " + what) {}
};

// An edge set handed to cut_capacity does not separate source from destination.
struct NotACut : Error {
  explicit NotACut(const std::string& what) : Error("not a cut: " + what) {}
};

struct UnknownNode : Error {
  explicit UnknownNode(const std::string& what) : Error("unknown node: " + what) {}
};

// A layer pair fails the connectivity property the reallocation step needs.
struct NotLayerConnected : Error {
  explicit NotLayerConnected(const std::string& what) : Error("not layer connected: " + what) {}
};

// The online scheduler never triggered before the simulation horizon.
struct HorizonExceeded : Error {
  explicit HorizonExceeded(const std::string& what) : Error("horizon exceeded: " + what) {}
};

// A brute-force oracle was asked for an instance beyond its enumeration budget.
struct TooLarge : Error {
  explicit TooLarge(const std::string& what) : Error("instance too large: " + what) {}
};

// The iterative solver exhausted its iteration budget without certifying optimality.
struct NonConvergence : Error {
  explicit NonConvergence(const std::string& what) : Error("non-convergence: " + what) {}
};

struct MaxIterationsExceeded : Error {
  explicit MaxIterationsExceeded(const std::string& what)
      : Error("max iterations exceeded: " + what) {}
};

}  // namespace ehflow
