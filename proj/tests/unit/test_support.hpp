#pragma once

#include <algorithm>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "fovtopo/graph.hpp"

namespace fovtopo::testing {

/// Random simple digraph with n in [1, max_n] and up to max_edges edges.
inline DirectedGraph random_digraph(std::mt19937_64& rng, std::size_t max_n,
                                    std::size_t max_edges, std::size_t min_edges = 0) {
  std::uniform_int_distribution<std::size_t> pick_n(min_edges > 0 ? 2 : 1, max_n);
  const std::size_t n = pick_n(rng);
  std::vector<Edge> all;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) all.push_back({a, b});
  std::shuffle(all.begin(), all.end(), rng);
  const std::size_t cap = std::min(max_edges, all.size());
  std::uniform_int_distribution<std::size_t> pick_m(std::min(min_edges, cap), cap);
  all.resize(pick_m(rng));
  return DirectedGraph(n, std::move(all));
}

/// Random oriented forest: each new vertex attaches to an earlier one with probability p_attach.
inline DirectedGraph random_forest(std::mt19937_64& rng, std::size_t max_n,
                                   double p_attach = 0.85) {
  std::uniform_int_distribution<std::size_t> pick_n(2, max_n);
  const std::size_t n = pick_n(rng);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution attach(p_attach);
  std::bernoulli_distribution flip(0.5);
  std::vector<Edge> edges;
  for (std::size_t k = 1; k < n; ++k) {
    if (!attach(rng) && !edges.empty()) continue;
    std::uniform_int_distribution<std::size_t> parent(0, k - 1);
    const std::size_t a = order[k];
    const std::size_t b = order[parent(rng)];
    edges.push_back(flip(rng) ? Edge{a, b} : Edge{b, a});
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  return DirectedGraph(n, std::move(edges));
}

}  // namespace fovtopo::testing
