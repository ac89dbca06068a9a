#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvsel/decoder.hpp"
#include "mvsel/ndcore.hpp"

namespace mvsel {

struct MultiviewDataset {
  std::vector<Matrix> views;                           // n x p_d each
  std::optional<std::vector<int>> labels;              // length n
  std::optional<std::vector<std::vector<Index>>> signals;  // planted truth per view

  Index num_samples() const { return views.empty() ? 0 : views.front().rows(); }
  std::size_t num_views() const { return views.size(); }
};

// Throws when the views disagree on the number of samples or labels have the wrong length.
void validate_dataset(const MultiviewDataset& data);

struct StandardizedViews {
  std::vector<ColumnStats<double>> stats;
  std::vector<Matrix> views;
};

StandardizedViews standardize_views(const std::vector<Matrix>& views);
std::vector<Matrix> apply_standardization(const std::vector<Matrix>& views,
                                          const std::vector<ColumnStats<double>>& stats);

struct TrainConfig {
  Index K = 2;
  std::vector<std::vector<Index>> hidden_widths = {{64, 256}};  // one list per view, or one shared list
  std::vector<double> lambdas = {0.1};                          // one per view, or one shared value
  std::vector<double> lr_net = {1e-3};                          // one per view, or one shared value
  double lr_z = 1e-3;
  int max_iters = 1000;
  double rel_tol = 1e-6;
  double r_fraction = 0.10;
  std::uint64_t seed = 1;
  bool use_laplacian = false;
  bool group_norm = false;
  double svm_c = 1.0;
  std::optional<double> svm_gamma;  // defaults to 1 / K

  const std::vector<Index>& hidden_for(std::size_t view) const;
  double lambda_for(std::size_t view) const;
  double lr_net_for(std::size_t view) const;
  double svm_gamma_or_default() const { return svm_gamma.value_or(1.0 / static_cast<double>(K)); }
};

// K may not exceed the smallest per-view selection size ceil(r * p_d).
Index latent_upper_bound(const std::vector<Index>& view_dims, double r_fraction);
void validate_config(const TrainConfig& cfg, const std::vector<Index>& view_dims);

struct FitResult {
  int stage = 1;
  std::vector<DecoderNetwork> networks;
  Matrix latent;
  std::vector<double> loss_trace;  // loss_trace[0] is the initial loss
  bool converged = false;
  int iterations_run = 0;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& msg, int iteration) : std::runtime_error(msg), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

// Called with (iteration, latent) for the initial code and after every latent update.
using LatentObserver = std::function<void(int, const Matrix&)>;

// Stage 1: alternating ADAM on the l2,1 objective, optionally Laplacian-smoothed.
// Views must already be standardized.
FitResult stage1_train(const MultiviewDataset& data, const TrainConfig& cfg,
                       const std::optional<std::vector<Matrix>>& laplacians = std::nullopt,
                       const LatentObserver& observer = {});

// Stage 2: squared Frobenius re-fit with every latent row kept in the unit ball.
FitResult stage2_train(const MultiviewDataset& data, const TrainConfig& cfg, const LatentObserver& observer = {});

// Stage 3: only the test latent code is optimized; networks are frozen.
FitResult stage3_infer(const MultiviewDataset& test_data, const std::vector<DecoderNetwork>& networks,
                       const TrainConfig& cfg, const LatentObserver& observer = {});

std::vector<Matrix> reconstruct(const std::vector<DecoderNetwork>& networks, const Matrix& latent);

struct FeatureSelection {
  std::vector<Vector> scores;                // column l2 norms of G_d(Z)
  std::vector<std::vector<Index>> indices;   // ascending
  double r_fraction = 0.0;
};

Index selection_size(Index p, double r_fraction);

// Top ceil(r * p_d) columns per view by norm, ties to the lower index.
FeatureSelection rank_features(const std::vector<Matrix>& recons, double r_fraction);
// Same ranking with an explicit per-view count.
FeatureSelection rank_features_top_k(const std::vector<Matrix>& recons, const std::vector<Index>& counts);

Matrix select_columns(const Matrix& m, const std::vector<Index>& columns);
MultiviewDataset subset_views(const MultiviewDataset& data, const std::vector<std::vector<Index>>& indices);
MultiviewDataset subset_views(const MultiviewDataset& data, const FeatureSelection& selection);

using SearchSpace = std::map<std::string, std::vector<double>>;

// Recognized keys: K, lambda, lr_net, lr_z, max_iters, r_fraction, svm_c, svm_gamma.
TrainConfig apply_overrides(const TrainConfig& base, const std::map<std::string, double>& values);

// Distinct grid points sampled uniformly without replacement; K values above
// the latent upper bound are dropped before sampling.
std::vector<TrainConfig> random_search(const SearchSpace& space, std::size_t n_draws, std::uint64_t seed,
                                       const TrainConfig& base, const std::vector<Index>& view_dims,
                                       std::vector<std::map<std::string, double>>* drawn = nullptr);

}  // namespace mvsel
