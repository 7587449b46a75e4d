#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fovtopo {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Graph construction invariant violated (self-loop, duplicate edge, index out of range).
class InvalidGraphError : public Error {
public:
  using Error::Error;
};

/// An operation that needs at least one edge received an empty edge set.
class EmptyGraphError : public Error {
public:
  using Error::Error;
};

class EigenSolverError : public Error {
public:
  using Error::Error;
};

/// Sector geometry outside what the three-point approximation supports (central angle >= pi).
class UnsupportedGeometryError : public Error {
public:
  using Error::Error;
};

/// Quality grid too coarse to resolve the sector.
class ResolutionError : public Error {
public:
  using Error::Error;
};

/// Two agents closer than the coincidence guard.
class DegenerateConfigurationError : public Error {
public:
  DegenerateConfigurationError(std::size_t a, std::size_t b, const std::string& what)
      : Error(what), first(a), second(b) {}
  std::size_t first;
  std::size_t second;
};

/// Weight-flip identity requested on a graph whose edge Laplacian is singular.
class LemmaPreconditionError : public Error {
public:
  LemmaPreconditionError(std::vector<std::size_t> cycle_edges, const std::string& what)
      : Error(what), cycle(std::move(cycle_edges)) {}
  /// Edge indices forming one cycle of the underlying undirected graph.
  std::vector<std::size_t> cycle;
};

/// Extended-system ordering produced matrices that disagree with their Kronecker factorization.
class InternalIndexingError : public Error {
public:
  using Error::Error;
};

/// A barrier potential was evaluated at or beyond its limit.
class ConstraintViolationError : public Error {
public:
  static constexpr std::size_t kNoEdge = static_cast<std::size_t>(-1);

  ConstraintViolationError(std::string barrier_label, double distance, double limit,
                           std::size_t edge_index = kNoEdge)
      : Error(describe(barrier_label, distance, limit, edge_index)),
        barrier(std::move(barrier_label)),
        distance(distance),
        limit(limit),
        edge(edge_index) {}

  std::string barrier;
  double distance;
  double limit;
  std::size_t edge;

private:
  static std::string describe(const std::string& label, double d, double lim, std::size_t e) {
    std::string s = "barrier '" + label + "' violated: distance " + std::to_string(d) +
                    " against limit " + std::to_string(lim);
    if (e != kNoEdge) {
      s += " on edge " + std::to_string(e);
    }
    return s;
  }
};

/// Two agents at or inside their collision radius.
class CollisionError : public Error {
public:
  CollisionError(std::size_t a, std::size_t b, double distance, const std::string& what)
      : Error(what), first(a), second(b), distance(distance) {}
  std::size_t first;
  std::size_t second;
  double distance;
};

/// Scenario or command-line configuration is invalid.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace fovtopo
