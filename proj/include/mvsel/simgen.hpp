#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvsel/graphlap.hpp"
#include "mvsel/ndcore.hpp"
#include "mvsel/pipeline.hpp"
#include "mvsel/rng.hpp"

namespace mvsel {

struct ScenarioTruth {
  std::vector<std::vector<Index>> signals;  // ascending, per view
  std::vector<int> labels;                  // classes are numbered from 1 in generation order
  std::string scenario;
  std::map<std::string, double> parameters;
  std::uint64_t seed = 0;
};

struct SimulatedData {
  MultiviewDataset data;             // labels and signals filled from the truth
  ScenarioTruth truth;
  std::vector<GraphSpec> graphs;     // per view; empty for scenarios without a graph
};

// Two views, two classes. Signals are the first ceil(0.1 p) columns of each view;
// the second class shifts every trigonometric argument by pi.
SimulatedData gen_nonlinear(Index n_class1, Index n_class2, Index p1, Index p2, std::uint64_t seed);

struct LinearCovariance {
  Matrix sigma;        // joint (p1 + p2) x (p1 + p2)
  Matrix v1, v2;       // p_d x 2, normalized so that V' Sigma_d V = I
  Matrix a;            // (p1 + p2) x 2 mean directions
  std::vector<Vector> means;  // three class means: Sigma a_1, Sigma a_2, 0
  double rho1 = 0.0, rho2 = 0.0;  // after any shrinkage
  int shrink_steps = 0;
};

Matrix compound_symmetric(Index size, double correlation);
LinearCovariance build_linear_covariance(Index p1, Index p2, double rho1, double rho2, double c, std::uint64_t seed);

// Two views, three classes of equal size drawn from N(mu_k, Sigma); signals are the first 20 columns.
SimulatedData gen_linear(Index n_per_class, Index p1, Index p2, double rho1, double rho2, double c,
                         std::uint64_t seed);

enum class Topology { scale_free, lattice, cluster };

Topology parse_topology(const std::string& name);
std::string topology_name(Topology t);

struct GraphScenarioParams {
  Topology topology = Topology::scale_free;
  Index p1 = 500, p2 = 500;
  Index n1 = 200, n2 = 150;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> graph_seed;  // defaults to seed; share it between train and test draws
  Index graph_vertices = 50;
  Index lattice_rows = 5;
  std::vector<Index> cluster_sizes = {17, 16, 17};
  Index signal_clusters = 2;
  double delta = 0.1;  // precision of the graph block is L_G + delta I
};

// Graph on params.graph_vertices vertices. Scale-free graphs are relabelled so
// that vertex 1 (the second variable) is the highest-degree hub.
GraphSpec make_topology(const GraphScenarioParams& params, Rng& rng);
std::vector<Index> topology_signals(const GraphScenarioParams& params, const GraphSpec& graph);

SimulatedData gen_graph_scenario(const GraphScenarioParams& params);

}  // namespace mvsel
