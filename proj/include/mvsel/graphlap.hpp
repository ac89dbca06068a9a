#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mvsel/ndcore.hpp"

namespace mvsel {

struct Edge {
  Index u = 0;
  Index v = 0;
  double w = 1.0;
};

// Weighted undirected graph; each unordered pair is stored once, no self-loops.
struct GraphSpec {
  Index num_vertices = 0;
  std::vector<Edge> edges;
};

struct GraphLaplacian {
  Matrix L;           // D - W
  Vector degrees;     // r_v = sum_u w(u, v)
  Matrix normalized;  // T^{-1/2} L T^{-1/2}, with T^{-1/2} = 0 on isolated vertices
};

// Throws std::invalid_argument on out-of-range indices, negative weights,
// self-loops or duplicate pairs.
void validate_graph(const GraphSpec& g);

GraphLaplacian build_laplacian(const GraphSpec& g);

// Lines of "u v [w]", 0-based, '#' starts a comment. Errors carry the line number.
GraphSpec parse_edge_list(std::string_view text, Index num_vertices);
std::string format_edge_list(const GraphSpec& g);

}  // namespace mvsel
