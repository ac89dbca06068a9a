#pragma once

// Finite-difference check of the decoder gradients through the stage losses,
// shared by the unit tests and the acceptance run.

#include <optional>
#include <vector>

#include "mvsel/decoder.hpp"
#include "mvsel/graphlap.hpp"
#include "mvsel/objectives.hpp"
#include "mvsel/rng.hpp"
#include "oracles.hpp"

namespace gradcheck {

using namespace mvsel;

struct Instance {
  std::vector<Matrix> views;
  std::vector<DecoderNetwork> nets;
  Matrix z;
  int stage = 1;
  Stage1LossConfig stage1;
};

struct Report {
  double max_rel_error = 0;  // against the larger of the two magnitudes, floored
  double max_abs_error = 0;
  std::size_t entries = 0;
};

inline Instance random_instance(Rng& rng, int stage, bool group_norm, bool laplacian) {
  Instance in;
  in.stage = stage;
  const Index n = 2 + static_cast<Index>(rng.below(7));   // 2..8
  const Index K = 1 + static_cast<Index>(rng.below(4));   // 1..4
  const std::size_t D = 1 + rng.below(2);
  in.z = normal_matrix(n, K, rng);
  for (std::size_t d = 0; d < D; ++d) {
    const Index p = 2 + static_cast<Index>(rng.below(7));
    std::vector<Index> hidden;
    const std::size_t depth = 1 + rng.below(2);
    for (std::size_t k = 0; k < depth; ++k) hidden.push_back(2 + static_cast<Index>(rng.below(7)));
    auto net = init_network(make_architecture(K, hidden, p, group_norm), rng, static_cast<int>(d));
    // Move group-norm parameters away from their trivial initial values.
    for (auto& layer : net.layers)
      if (layer.spec.group_norm) {
        layer.gamma = uniform_matrix(1, layer.gamma.size(), 0.5, 1.5, rng);
        layer.beta = uniform_matrix(1, layer.beta.size(), -0.5, 0.5, rng);
      }
    in.nets.push_back(std::move(net));
    in.views.push_back(normal_matrix(n, p, rng));
    in.stage1.lambdas.push_back(rng.uniform(0.0, 1.0));
  }
  if (laplacian && stage == 1) {
    in.stage1.laplacians.emplace();
    for (const auto& v : in.views) {
      const auto g = oracle::random_graph(v.cols(), 0.5, rng);
      in.stage1.laplacians->push_back(build_laplacian(g).normalized);
    }
  }
  return in;
}

inline double loss_of(const Instance& in, const std::vector<DecoderNetwork>& nets, const Matrix& z) {
  std::vector<Matrix> recons;
  for (const auto& net : nets) recons.push_back(forward(net, z));
  return in.stage == 1 ? stage1_loss(in.views, recons, in.stage1) : stage2_loss(in.views, recons);
}

inline void accumulate(Report& r, const Matrix& analytic, const Matrix& numeric, double floor) {
  for (Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic(i), b = numeric(i);
    const double abs_err = std::abs(a - b);
    r.max_abs_error = std::max(r.max_abs_error, abs_err);
    r.max_rel_error = std::max(r.max_rel_error, abs_err / std::max({std::abs(a), std::abs(b), floor}));
    ++r.entries;
  }
}

// Every weight, bias, group-norm parameter and latent entry.
inline Report check(const Instance& in, double h = 1e-4, double floor = 1.0) {
  std::vector<Matrix> recons, upstream;
  std::vector<ForwardCache<double>> caches(in.nets.size());
  for (std::size_t d = 0; d < in.nets.size(); ++d) recons.push_back(forward(in.nets[d], in.z, &caches[d]));
  if (in.stage == 1) stage1_loss(in.views, recons, in.stage1, &upstream);
  else stage2_loss(in.views, recons, &upstream);

  Report report;
  Matrix dz = Matrix::Zero(in.z.rows(), in.z.cols());
  for (std::size_t d = 0; d < in.nets.size(); ++d) {
    const auto g = backward(in.nets[d], in.z, upstream[d], caches[d]);
    dz += g.dZ;
    for (std::size_t l = 0; l < in.nets[d].layers.size(); ++l) {
      auto probe = [&](auto member, const Matrix& analytic) {
        const Matrix x0 = (in.nets[d].layers[l].*member);
        const Matrix numeric = finite_diff_grad<double>(
            [&](const Matrix& x) {
              auto nets = in.nets;
              nets[d].layers[l].*member = x;
              return loss_of(in, nets, in.z);
            },
            x0, h);
        accumulate(report, analytic, numeric, floor);
      };
      const auto& lg = g.layers[l];
      probe(&Layer<double>::W, lg.dW);
      probe(&Layer<double>::b, lg.db);
      if (in.nets[d].layers[l].spec.group_norm) {
        probe(&Layer<double>::gamma, lg.dgamma);
        probe(&Layer<double>::beta, lg.dbeta);
      }
    }
  }
  const Matrix numeric_z =
      finite_diff_grad<double>([&](const Matrix& z) { return loss_of(in, in.nets, z); }, in.z, h);
  accumulate(report, dz, numeric_z, floor);
  return report;
}

}  // namespace gradcheck
