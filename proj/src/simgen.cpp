#include "mvsel/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace mvsel {

namespace {

constexpr double kPi = std::numbers::pi;

Vector linspace_0_3pi(Index n) {
  if (n == 1) return Vector::Zero(1);
  return Vector::LinSpaced(n, 0.0, 3.0 * kPi);
}

// theta = evenly spaced points + 0.5 U(0, 1), redrawn for every column.
Vector perturbed_theta(const Vector& base, Rng& rng) {
  Vector theta(base.size());
  for (Index i = 0; i < base.size(); ++i) theta(i) = base(i) + 0.5 * rng.uniform();
  return theta;
}

// Noise-free signal columns [0, count) for one class block.
// view 0: theta (first five), then cos(theta + shift) + N(0, 1)
// view 1: exp(0.15 theta) sin(1.5 theta + shift) (first five), then exp(0.15 theta) cos(1.5 theta + shift)
void fill_signal_block(Matrix& out, Index row0, Index n, Index count, int view, double shift, Rng& rng) {
  const Vector base = linspace_0_3pi(n);
  for (Index j = 0; j < count; ++j) {
    const Vector theta = perturbed_theta(base, rng);
    for (Index i = 0; i < n; ++i) {
      const double t = theta(i);
      double v;
      if (view == 0)
        v = j < 5 ? t : std::cos(t + shift) + rng.normal();
      else
        v = std::exp(0.15 * t) * (j < 5 ? std::sin(1.5 * t + shift) : std::cos(1.5 * t + shift));
      out(row0 + i, j) = v;
    }
  }
}

std::vector<Index> range(Index begin, Index end) {
  std::vector<Index> out;
  for (Index i = begin; i < end; ++i) out.push_back(i);
  return out;
}

void attach_truth(SimulatedData& sim) {
  sim.data.labels = sim.truth.labels;
  sim.data.signals = sim.truth.signals;
}

}  // namespace

SimulatedData gen_nonlinear(Index n_class1, Index n_class2, Index p1, Index p2, std::uint64_t seed) {
  if (n_class1 < 1 || n_class2 < 1) throw std::invalid_argument("gen_nonlinear: class sizes must be positive");
  if (p1 < 50 || p2 < 50) throw std::invalid_argument("gen_nonlinear: views need at least 50 variables");
  const Index n = n_class1 + n_class2;
  const Index dims[2] = {p1, p2};
  const Rng root = Rng(seed).substream("nonlinear");

  SimulatedData sim;
  sim.truth.scenario = "nonlinear";
  sim.truth.seed = seed;
  sim.truth.parameters = {{"n1", double(n_class1)}, {"n2", double(n_class2)}, {"p1", double(p1)}, {"p2", double(p2)}};
  sim.truth.labels.assign(static_cast<std::size_t>(n_class1), 1);
  sim.truth.labels.insert(sim.truth.labels.end(), static_cast<std::size_t>(n_class2), 2);

  for (int view = 0; view < 2; ++view) {
    const Index p = dims[view];
    const Index signals = selection_size(p, 0.10);
    Matrix x = Matrix::Zero(n, p);
    Rng signal_rng = root.substream("signal", static_cast<std::uint64_t>(view));
    fill_signal_block(x, 0, n_class1, signals, view, 0.0, signal_rng);
    fill_signal_block(x, n_class1, n_class2, signals, view, kPi, signal_rng);
    Rng noise_rng = root.substream("noise", static_cast<std::uint64_t>(view));
    x += 0.2 * normal_matrix(n, p, noise_rng);
    sim.data.views.push_back(std::move(x));
    sim.truth.signals.push_back(range(0, signals));
  }
  attach_truth(sim);
  return sim;
}

// ------------------------------------------------------------------- linear

Matrix compound_symmetric(Index size, double correlation) {
  Matrix m = Matrix::Constant(size, size, correlation);
  m.diagonal().setOnes();
  return m;
}

namespace {

Matrix view_covariance(Index p) {
  Matrix s = Matrix::Identity(p, p);
  s.topLeftCorner(10, 10) = compound_symmetric(10, 0.8);
  s.block(10, 10, 10, 10) = compound_symmetric(10, 0.8);
  return s;
}

// Gram-Schmidt in the <a, b> = a' S b inner product.
void sigma_orthonormalize(Matrix& v, const Matrix& s) {
  for (Index k = 0; k < v.cols(); ++k) {
    for (Index j = 0; j < k; ++j) v.col(k) -= (v.col(j).dot(s * v.col(k))) * v.col(j);
    v.col(k) /= std::sqrt(v.col(k).dot(s * v.col(k)));
  }
}

}  // namespace

LinearCovariance build_linear_covariance(Index p1, Index p2, double rho1, double rho2, double c, std::uint64_t seed) {
  if (p1 < 20 || p2 < 20) throw std::invalid_argument("gen_linear: views need at least 20 variables");
  if (!(rho1 >= 0 && rho1 < 1 && rho2 >= 0 && rho2 < 1))
    throw std::invalid_argument("gen_linear: rho values must lie in [0, 1)");
  Rng rng = Rng(seed).substream("linear/loadings");
  const Matrix s1 = view_covariance(p1);
  const Matrix s2 = view_covariance(p2);
  LinearCovariance out;
  out.v1 = Matrix::Zero(p1, 2);
  out.v2 = Matrix::Zero(p2, 2);
  out.v1.topRows(20) = uniform_matrix(20, 2, 0.5, 1.0, rng);
  out.v2.topRows(20) = uniform_matrix(20, 2, 0.5, 1.0, rng);
  sigma_orthonormalize(out.v1, s1);
  sigma_orthonormalize(out.v2, s2);

  const Index P = p1 + p2;
  out.rho1 = rho1;
  out.rho2 = rho2;
  for (int attempt = 0;; ++attempt) {
    const Matrix d = Eigen::Vector2d(out.rho1, out.rho2).asDiagonal();
    const Matrix s12 = s1 * out.v1 * d * out.v2.transpose() * s2;
    out.sigma.resize(P, P);
    out.sigma << s1, s12, s12.transpose(), s2;
    if (Eigen::LLT<Matrix>(out.sigma).info() == Eigen::Success) break;
    if (attempt == 20)
      throw std::runtime_error("gen_linear: joint covariance is not positive definite after 20 shrink steps");
    out.rho1 *= 0.9;
    out.rho2 *= 0.9;
    out.shrink_steps = attempt + 1;
  }

  out.a = Matrix::Zero(P, 2);
  for (Index offset : {Index{0}, p1}) {
    out.a.block(offset, 0, 10, 1).setConstant(c);
    out.a.block(offset + 10, 1, 10, 1).setConstant(-c);
  }
  const Matrix sa = out.sigma * out.a;
  out.means = {sa.col(0), sa.col(1), Vector::Zero(P)};
  return out;
}

SimulatedData gen_linear(Index n_per_class, Index p1, Index p2, double rho1, double rho2, double c,
                         std::uint64_t seed) {
  if (n_per_class < 1) throw std::invalid_argument("gen_linear: class size must be positive");
  const LinearCovariance cov = build_linear_covariance(p1, p2, rho1, rho2, c, seed);
  const Eigen::LLT<Matrix> llt(cov.sigma);
  const Matrix lower = llt.matrixL();
  const Index P = p1 + p2;
  const Index n = 3 * n_per_class;

  Rng rng = Rng(seed).substream("linear/samples");
  Matrix joint(n, P);
  for (int k = 0; k < 3; ++k) {
    const Matrix z = normal_matrix(n_per_class, P, rng);
    joint.middleRows(k * n_per_class, n_per_class) = (z * lower.transpose()).rowwise() + cov.means[k].transpose();
  }

  SimulatedData sim;
  sim.truth.scenario = "linear";
  sim.truth.seed = seed;
  sim.truth.parameters = {{"n_per_class", double(n_per_class)}, {"p1", double(p1)}, {"p2", double(p2)},
                          {"rho1", cov.rho1}, {"rho2", cov.rho2}, {"c", c}};
  for (int k = 0; k < 3; ++k) sim.truth.labels.insert(sim.truth.labels.end(), static_cast<std::size_t>(n_per_class), k + 1);
  sim.data.views = {joint.leftCols(p1), joint.rightCols(p2)};
  sim.truth.signals = {range(0, 20), range(0, 20)};
  attach_truth(sim);
  return sim;
}

// -------------------------------------------------------------------- graphs

Topology parse_topology(const std::string& name) {
  if (name == "scale_free" || name == "scale-free") return Topology::scale_free;
  if (name == "lattice") return Topology::lattice;
  if (name == "cluster") return Topology::cluster;
  throw std::invalid_argument("unknown topology '" + name + "' (expected scale_free, lattice or cluster)");
}

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::scale_free: return "scale_free";
    case Topology::lattice: return "lattice";
    case Topology::cluster: return "cluster";
  }
  return "unknown";
}

GraphSpec make_topology(const GraphScenarioParams& params, Rng& rng) {
  const Index g = params.graph_vertices;
  if (g < 3) throw std::invalid_argument("graph scenario: need at least 3 graph vertices");
  GraphSpec graph;
  graph.num_vertices = g;
  switch (params.topology) {
    case Topology::scale_free: {
      // Preferential attachment, one edge per arriving vertex.
      std::vector<Index> degree(static_cast<std::size_t>(g), 0);
      std::vector<std::pair<Index, Index>> edges;
      for (Index v = 1; v < g; ++v) {
        Index target = 0;
        if (v > 1) {
          Index total = 0;
          for (Index u = 0; u < v; ++u) total += degree[u];
          Index pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(total)));
          for (Index u = 0; u < v; ++u) {
            if (pick < degree[u]) {
              target = u;
              break;
            }
            pick -= degree[u];
          }
        }
        edges.emplace_back(target, v);
        ++degree[target];
        ++degree[v];
      }
      const Index hub = static_cast<Index>(std::max_element(degree.begin(), degree.end()) - degree.begin());
      auto relabel = [hub](Index v) { return v == hub ? Index{1} : v == 1 ? hub : v; };
      for (auto [u, v] : edges) graph.edges.push_back({relabel(u), relabel(v), 1.0});
      break;
    }
    case Topology::lattice: {
      const Index rows = params.lattice_rows;
      if (rows < 1 || g % rows != 0)
        throw std::invalid_argument("graph scenario: lattice rows must divide the number of graph vertices");
      const Index cols = g / rows;
      for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) {
          const Index v = r * cols + c;
          if (c + 1 < cols) graph.edges.push_back({v, v + 1, 1.0});
          if (r + 1 < rows) graph.edges.push_back({v, v + cols, 1.0});
        }
      break;
    }
    case Topology::cluster: {
      Index total = 0;
      for (Index s : params.cluster_sizes) {
        if (s < 1) throw std::invalid_argument("graph scenario: cluster sizes must be positive");
        total += s;
      }
      if (total != g) throw std::invalid_argument("graph scenario: cluster sizes must sum to the graph vertex count");
      if (params.signal_clusters < 1 || params.signal_clusters > static_cast<Index>(params.cluster_sizes.size()))
        throw std::invalid_argument("graph scenario: invalid number of signal clusters");
      Index start = 0;
      for (Index s : params.cluster_sizes) {
        for (Index u = start; u < start + s; ++u)
          for (Index v = u + 1; v < start + s; ++v) graph.edges.push_back({u, v, 1.0});
        start += s;
      }
      break;
    }
  }
  return graph;
}

std::vector<Index> topology_signals(const GraphScenarioParams& params, const GraphSpec& graph) {
  std::vector<Index> out;
  switch (params.topology) {
    case Topology::scale_free:
      out.push_back(1);
      for (const Edge& e : graph.edges) {
        if (e.u == 1) out.push_back(e.v);
        if (e.v == 1) out.push_back(e.u);
      }
      break;
    case Topology::lattice:
      out = range(0, graph.num_vertices - 1);
      break;
    case Topology::cluster: {
      Index end = 0;
      for (Index c = 0; c < params.signal_clusters; ++c) end += params.cluster_sizes[c];
      out = range(0, end);
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SimulatedData gen_graph_scenario(const GraphScenarioParams& params) {
  const Index g = params.graph_vertices;
  if (params.n1 < 1 || params.n2 < 1) throw std::invalid_argument("graph scenario: class sizes must be positive");
  if (params.p1 < g || params.p2 < g)
    throw std::invalid_argument("graph scenario: views need at least " + std::to_string(g) + " variables");
  if (!(params.delta > 0)) throw std::invalid_argument("graph scenario: delta must be positive");

  Rng graph_rng = Rng(params.graph_seed.value_or(params.seed)).substream("graph/topology");
  const GraphSpec graph = make_topology(params, graph_rng);
  const std::vector<Index> signals = topology_signals(params, graph);

  Matrix precision = build_laplacian(graph).L;
  precision.diagonal().array() += params.delta;
  const Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw std::runtime_error("graph scenario: L + delta I is not positive definite");
  const Matrix upper = llt.matrixU();

  const Rng root = Rng(params.seed).substream("graph/samples");
  const Index n = params.n1 + params.n2;
  const Index dims[2] = {params.p1, params.p2};
  const double noise_scale[2] = {1.0, 0.2};

  SimulatedData sim;
  sim.truth.scenario = "graph_" + topology_name(params.topology);
  sim.truth.seed = params.seed;
  sim.truth.parameters = {{"n1", double(params.n1)}, {"n2", double(params.n2)}, {"p1", double(params.p1)},
                          {"p2", double(params.p2)}, {"graph_vertices", double(g)}, {"delta", params.delta}};
  sim.truth.labels.assign(static_cast<std::size_t>(params.n1), 1);
  sim.truth.labels.insert(sim.truth.labels.end(), static_cast<std::size_t>(params.n2), 2);

  for (int view = 0; view < 2; ++view) {
    const Index p = dims[view];
    Matrix tilde = Matrix::Zero(n, g);
    Rng signal_rng = root.substream("signal", static_cast<std::uint64_t>(view));
    fill_signal_block(tilde, 0, params.n1, g, view, 0.0, signal_rng);
    fill_signal_block(tilde, params.n1, params.n2, g, view, kPi, signal_rng);

    Matrix x = Matrix::Zero(n, p);
    for (Index s : signals) x.col(s) = tilde.col(s);

    // Graph block noise has covariance (L + delta I)^{-1}: solve U x = z with U' U = L + delta I.
    Rng noise_rng = root.substream("noise", static_cast<std::uint64_t>(view));
    const Matrix z = normal_matrix(n, p, noise_rng);
    Matrix noise = z;
    noise.leftCols(g) = upper.triangularView<Eigen::Upper>().solve(z.leftCols(g).transpose()).transpose();
    x += noise_scale[view] * noise;

    sim.data.views.push_back(std::move(x));
    sim.truth.signals.push_back(signals);
    GraphSpec view_graph = graph;
    view_graph.num_vertices = p;
    sim.graphs.push_back(std::move(view_graph));
  }
  attach_truth(sim);
  return sim;
}

}  // namespace mvsel
