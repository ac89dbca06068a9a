#include <doctest.h>

#include <algorithm>
#include <set>

#include "mvsel/pipeline.hpp"
#include "mvsel/rng.hpp"
#include "mvsel/simgen.hpp"
#include "oracles.hpp"

using namespace mvsel;

namespace {

// Two views driven by a shared two-dimensional factor.
MultiviewDataset tiny_data(std::uint64_t seed, Index n = 20, Index p = 10) {
  Rng rng(seed);
  const Matrix f = normal_matrix(n, 2, rng);
  MultiviewDataset d;
  for (int v = 0; v < 2; ++v) {
    const Matrix b = normal_matrix(2, p, rng);
    d.views.push_back((f * b).array().tanh().matrix() + 0.1 * normal_matrix(n, p, rng));
  }
  d.views = standardize_views(d.views).views;
  return d;
}

TrainConfig tiny_config(int iters = 500) {
  TrainConfig cfg;
  cfg.K = 1;
  cfg.hidden_widths = {{8, 16}};
  cfg.max_iters = iters;
  cfg.lr_net = {1e-2};
  cfg.lr_z = 1e-2;
  cfg.rel_tol = 0;
  cfg.r_fraction = 0.5;
  cfg.seed = 3;
  return cfg;
}

double max_row_norm(const Matrix& z) { return z.rows() ? z.rowwise().norm().maxCoeff() : 0.0; }

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config helpers") {
  CHECK(selection_size(500, 0.10) == 50);
  CHECK(selection_size(200, 0.10) == 20);
  CHECK(selection_size(15, 0.10) == 2);
  CHECK(selection_size(3, 0.01) == 1);
  CHECK_THROWS(selection_size(10, 0.0));
  CHECK_THROWS(selection_size(10, 1.5));
  CHECK(latent_upper_bound({200, 50}, 0.1) == 5);

  TrainConfig cfg;
  cfg.K = 6;
  CHECK_THROWS(validate_config(cfg, {200, 50}));
  cfg.K = 5;
  CHECK_NOTHROW(validate_config(cfg, {200, 50}));
  cfg.lambdas = {0.1, 0.2, 0.3};
  CHECK_THROWS(validate_config(cfg, {200, 50}));
  CHECK(cfg.svm_gamma_or_default() == doctest::Approx(0.2));
}

TEST_CASE("stage 1 with zero iterations returns the initial state") {
  const auto data = tiny_data(1);
  auto cfg = tiny_config(0);
  const auto fit = stage1_train(data, cfg);
  CHECK(fit.loss_trace.size() == 1);
  CHECK(fit.iterations_run == 0);
  Rng root(cfg.seed);
  Rng zr = root.substream("stage1/latent");
  CHECK(fit.latent == normal_matrix(20, cfg.K, zr));
}

TEST_CASE("stage 1 descends and is deterministic") {
  const auto data = tiny_data(2);
  for (Index K : {1, 2}) {
    auto cfg = tiny_config();
    cfg.K = K;
    const auto a = stage1_train(data, cfg);
    const auto b = stage1_train(data, cfg);
    CHECK(a.loss_trace.back() < a.loss_trace.front());
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.latent == b.latent);
    CHECK(a.networks == b.networks);
  }
}

TEST_CASE("stage 1 with default learning rates still descends") {
  const auto data = tiny_data(12);
  TrainConfig cfg;
  cfg.K = 2;
  cfg.max_iters = 200;
  cfg.r_fraction = 0.5;
  const auto fit = stage1_train(data, cfg);
  CHECK(fit.loss_trace.back() < fit.loss_trace.front());
}

TEST_CASE("identity Laplacian reproduces the plain stage-1 run") {
  const auto data = tiny_data(4);
  auto cfg = tiny_config(50);
  const auto plain = stage1_train(data, cfg);
  cfg.use_laplacian = true;
  const std::vector<Matrix> eye = {Matrix::Identity(10, 10), Matrix::Identity(10, 10)};
  const auto smoothed = stage1_train(data, cfg, eye);
  CHECK(plain.loss_trace == smoothed.loss_trace);
  CHECK_THROWS(stage1_train(data, cfg));
}

TEST_CASE("training errors") {
  auto data = tiny_data(5);
  auto cfg = tiny_config(10);
  data.views[1] = Matrix::Zero(19, 10);
  CHECK_THROWS(stage1_train(data, cfg));
  auto nan_data = tiny_data(5);
  nan_data.views[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(stage1_train(nan_data, cfg), std::invalid_argument);
  // Finite inputs whose squared residual overflows.
  auto huge = tiny_data(5);
  huge.views[1](2, 3) = 1e200;
  try {
    stage1_train(huge, cfg);
    FAIL("expected a training error");
  } catch (const TrainingError& e) {
    CHECK(e.iteration() == 0);
    CHECK(std::string(e.what()).find(std::to_string(e.iteration())) != std::string::npos);
  }
}

TEST_CASE("stage 2 keeps latent rows in the unit ball at every iterate") {
  const auto data = tiny_data(6);
  auto cfg = tiny_config(300);
  cfg.K = 2;
  cfg.lr_z = 5e-2;
  double worst = 0;
  int calls = 0;
  const auto fit = stage2_train(data, cfg, [&](int, const Matrix& z) {
    worst = std::max(worst, max_row_norm(z));
    ++calls;
  });
  CHECK(worst <= 1 + 1e-9);
  CHECK(calls == fit.iterations_run + 1);
  CHECK(fit.loss_trace.back() < fit.loss_trace.front());
}

TEST_CASE("stage 2 overparameterized linear fit") {
  Rng rng(10);
  MultiviewDataset d;
  d.views.push_back(normal_matrix(6, 3, rng));
  TrainConfig cfg;
  cfg.K = 3;
  cfg.hidden_widths = {{}};
  cfg.lr_net = {1e-2};
  cfg.lr_z = 1e-2;
  cfg.max_iters = 4000;
  cfg.rel_tol = 0;
  const auto fit = stage2_train(d, cfg);
  CHECK(fit.loss_trace.back() < 1e-2 * fit.loss_trace.front());
}

TEST_CASE("stage 3 leaves networks untouched and recovers the training fit") {
  const auto data = tiny_data(7);
  auto cfg = tiny_config(800);
  cfg.K = 2;
  const auto fit2 = stage2_train(data, cfg);
  const auto frozen = fit2.networks;
  double worst = 0;
  const auto fit3 = stage3_infer(data, fit2.networks, cfg, [&](int, const Matrix& z) {
    worst = std::max(worst, max_row_norm(z));
  });
  CHECK(fit2.networks == frozen);
  CHECK(fit3.networks == frozen);
  CHECK(worst <= 1 + 1e-9);
  // With ELU layers the per-row problem has several basins, so only descent is guaranteed.
  CHECK(fit3.loss_trace.back() < fit3.loss_trace.front());

  // A linear decoder makes inference convex in Z, and the stage-2 latent code is
  // feasible, so re-inferring the training rows must land within 10% of that fit.
  auto linear = cfg;
  linear.hidden_widths = {{}};
  const auto lin2 = stage2_train(data, linear);
  const auto lin3 = stage3_infer(data, lin2.networks, linear);
  CHECK(lin3.loss_trace.back() <= 1.1 * lin2.loss_trace.back());

  MultiviewDataset one;
  for (const auto& v : data.views) one.views.push_back(v.topRows(1));
  const auto single = stage3_infer(one, fit2.networks, cfg);
  CHECK(single.latent.rows() == 1);
  CHECK(max_row_norm(single.latent) <= 1 + 1e-9);

  MultiviewDataset wrong;
  wrong.views = {data.views[0], data.views[1].leftCols(4)};
  CHECK_THROWS(stage3_infer(wrong, fit2.networks, cfg));
}

TEST_CASE("feature ranking") {
  Matrix r(2, 3);
  r << 0.1, 5.0, 0.0, 0.0, 0.0, 3.0;
  const auto sel = rank_features_top_k({r}, {2});
  CHECK(sel.indices[0] == std::vector<Index>{1, 2});

  Matrix z(3, 4);
  z << 0, 1e-9, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0;
  const auto zs = rank_features_top_k({z}, {1});
  CHECK(zs.indices[0] == std::vector<Index>{1});

  Matrix tie = Matrix::Ones(2, 4);
  CHECK(rank_features_top_k({tie}, {2}).indices[0] == std::vector<Index>{0, 1});

  Rng rng(3);
  const Matrix big = normal_matrix(5, 500, rng);
  const auto bs = rank_features({big, Matrix(normal_matrix(5, 37, rng))}, 0.10);
  CHECK(bs.indices[0].size() == 50);
  CHECK(bs.indices[1].size() == 4);
  CHECK(std::is_sorted(bs.indices[0].begin(), bs.indices[0].end()));
  CHECK_THROWS(rank_features_top_k({tie}, {5}));
}

TEST_CASE("column subsetting") {
  const auto data = tiny_data(8);
  const std::vector<Index> all = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto same = subset_views(data, {all, all});
  CHECK(same.views[0] == data.views[0]);
  const auto first = subset_views(data, std::vector<std::vector<Index>>{{0}, {3}});
  CHECK(first.views[0] == data.views[0].col(0));
  CHECK(first.views[1] == data.views[1].col(3));
  CHECK_THROWS(subset_views(data, std::vector<std::vector<Index>>{{10}, {0}}));
}

TEST_CASE("perfect ranking keeps every planted signal") {
  const auto sim = gen_nonlinear(30, 20, 60, 60, 5);
  std::vector<Matrix> oracle_recon;
  for (std::size_t d = 0; d < 2; ++d) {
    Matrix r = Matrix::Zero(50, 60);
    for (Index j : sim.truth.signals[d]) r.col(j) = sim.data.views[d].col(j);
    oracle_recon.push_back(r);
  }
  const auto sel = rank_features(oracle_recon, 0.10);
  const auto sub = subset_views(sim.data, sel);
  for (std::size_t d = 0; d < 2; ++d) {
    CHECK(sel.indices[d] == sim.truth.signals[d]);
    CHECK(sub.views[d] == sim.data.views[d].leftCols(6));
  }
}

TEST_CASE("random search") {
  const SearchSpace space = {{"lambda", {0.01, 0.1, 1.0}}, {"lr_z", {1e-3, 1e-2, 1e-1, 1.0}}, {"svm_c", {1, 10}}};
  std::vector<std::map<std::string, double>> drawn;
  const auto cfgs = random_search(space, 5, 42, TrainConfig{}, {100, 100}, &drawn);
  CHECK(cfgs.size() == 5);
  CHECK(std::set<std::map<std::string, double>>(drawn.begin(), drawn.end()).size() == 5);

  std::vector<std::map<std::string, double>> again;
  random_search(space, 5, 42, TrainConfig{}, {100, 100}, &again);
  CHECK(again == drawn);

  std::vector<std::map<std::string, double>> full;
  random_search(space, 24, 1, TrainConfig{}, {100, 100}, &full);
  CHECK(std::set<std::map<std::string, double>>(full.begin(), full.end()).size() == 24);
  CHECK_THROWS(random_search(space, 25, 1, TrainConfig{}, {100, 100}));

  std::vector<std::map<std::string, double>> ks;
  const auto kc = random_search({{"K", {1, 2, 50}}}, 2, 9, TrainConfig{}, {100, 100}, &ks);
  for (const auto& c : kc) CHECK(c.K <= 10);
  CHECK_THROWS(random_search({{"K", {50}}}, 1, 9, TrainConfig{}, {100, 100}));
  CHECK_THROWS(apply_overrides(TrainConfig{}, {{"bogus", 1}}));
  CHECK(apply_overrides(TrainConfig{}, {{"svm_gamma", 0.5}}).svm_gamma_or_default() == 0.5);
}

}
