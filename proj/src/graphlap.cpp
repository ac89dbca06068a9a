#include "mvsel/graphlap.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace mvsel {

void validate_graph(const GraphSpec& g) {
  if (g.num_vertices < 0) throw std::invalid_argument("graph: negative vertex count");
  std::set<std::pair<Index, Index>> seen;
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const Edge& e = g.edges[k];
    const std::string where = "graph: edge " + std::to_string(k) + " (" + std::to_string(e.u) + ", " +
                              std::to_string(e.v) + ")";
    if (e.u < 0 || e.v < 0 || e.u >= g.num_vertices || e.v >= g.num_vertices)
      throw std::invalid_argument(where + " has an index outside [0, " + std::to_string(g.num_vertices) + ")");
    if (e.u == e.v) throw std::invalid_argument(where + " is a self-loop");
    if (!(e.w >= 0.0) || !std::isfinite(e.w)) throw std::invalid_argument(where + " has an invalid weight");
    if (!seen.emplace(std::min(e.u, e.v), std::max(e.u, e.v)).second)
      throw std::invalid_argument(where + " is a duplicate");
  }
}

GraphLaplacian build_laplacian(const GraphSpec& g) {
  validate_graph(g);
  const Index p = g.num_vertices;
  GraphLaplacian out;
  out.L = Matrix::Zero(p, p);
  out.degrees = Vector::Zero(p);
  for (const Edge& e : g.edges) {
    out.L(e.u, e.v) -= e.w;
    out.L(e.v, e.u) -= e.w;
    out.degrees(e.u) += e.w;
    out.degrees(e.v) += e.w;
  }
  out.L.diagonal() = out.degrees;

  Vector inv_sqrt(p);
  for (Index v = 0; v < p; ++v) inv_sqrt(v) = out.degrees(v) > 0.0 ? 1.0 / std::sqrt(out.degrees(v)) : 0.0;
  out.normalized = Matrix::Zero(p, p);
  for (Index u = 0; u < p; ++u)
    for (Index v = 0; v < p; ++v)
      if (out.L(u, v) != 0.0) out.normalized(u, v) = out.L(u, v) * inv_sqrt(u) * inv_sqrt(v);
  // Product order differs between (u, v) and (v, u); force exact symmetry.
  for (Index u = 0; u < p; ++u)
    for (Index v = u + 1; v < p; ++v) out.normalized(v, u) = out.normalized(u, v);
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line_no, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw std::invalid_argument("edge list line " + std::to_string(line_no) + ": invalid " + what + " '" +
                                std::string(tok) + "'");
  return value;
}

}  // namespace

GraphSpec parse_edge_list(std::string_view text, Index num_vertices) {
  GraphSpec g;
  g.num_vertices = num_vertices;
  std::set<std::pair<Index, Index>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      if (j > i) tokens.push_back(line.substr(i, j - i));
      i = j;
    }
    const std::string where = "edge list line " + std::to_string(line_no);
    if (tokens.size() < 2 || tokens.size() > 3)
      throw std::invalid_argument(where + ": expected 'u v [w]', got " + std::to_string(tokens.size()) + " fields");
    Edge e;
    e.u = parse_number<long long>(tokens[0], line_no, "vertex index");
    e.v = parse_number<long long>(tokens[1], line_no, "vertex index");
    if (tokens.size() == 3) e.w = parse_number<double>(tokens[2], line_no, "weight");
    if (e.u < 0 || e.v < 0 || e.u >= num_vertices || e.v >= num_vertices)
      throw std::invalid_argument(where + ": vertex index out of range [0, " + std::to_string(num_vertices) + ")");
    if (e.u == e.v) throw std::invalid_argument(where + ": self-loop on vertex " + std::to_string(e.u));
    if (!(e.w >= 0.0) || !std::isfinite(e.w)) throw std::invalid_argument(where + ": weight must be finite and >= 0");
    if (!seen.emplace(std::min(e.u, e.v), std::max(e.u, e.v)).second)
      throw std::invalid_argument(where + ": duplicate edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ")");
    g.edges.push_back(e);
  }
  return g;
}

std::string format_edge_list(const GraphSpec& g) {
  std::ostringstream os;
  os.precision(17);
  os << "# vertices " << g.num_vertices << "\n";
  for (const Edge& e : g.edges) os << e.u << ' ' << e.v << ' ' << e.w << '\n';
  return os.str();
}

}  // namespace mvsel
