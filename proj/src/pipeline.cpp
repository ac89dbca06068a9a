#include "mvsel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "mvsel/objectives.hpp"
#include "mvsel/rng.hpp"

namespace mvsel {

void validate_dataset(const MultiviewDataset& data) {
  if (data.views.empty()) throw std::invalid_argument("dataset has no views");
  const Index n = data.views.front().rows();
  for (std::size_t d = 0; d < data.views.size(); ++d) {
    if (data.views[d].rows() != n)
      throw std::invalid_argument("view " + std::to_string(d) + " has " + std::to_string(data.views[d].rows()) +
                                  " samples, view 0 has " + std::to_string(n));
    if (data.views[d].cols() < 1) throw std::invalid_argument("view " + std::to_string(d) + " has no columns");
    if (!data.views[d].allFinite()) throw std::invalid_argument("view " + std::to_string(d) + " has non-finite values");
  }
  if (data.labels && static_cast<Index>(data.labels->size()) != n)
    throw std::invalid_argument("labels have length " + std::to_string(data.labels->size()) + ", expected " +
                                std::to_string(n));
}

StandardizedViews standardize_views(const std::vector<Matrix>& views) {
  StandardizedViews out;
  for (const auto& v : views) {
    out.stats.push_back(standardize_fit(v));
    out.views.push_back(standardize_apply(v, out.stats.back()));
  }
  return out;
}

std::vector<Matrix> apply_standardization(const std::vector<Matrix>& views,
                                          const std::vector<ColumnStats<double>>& stats) {
  if (views.size() != stats.size()) throw std::invalid_argument("standardization: view count mismatch");
  std::vector<Matrix> out;
  for (std::size_t d = 0; d < views.size(); ++d) out.push_back(standardize_apply(views[d], stats[d]));
  return out;
}

// ----------------------------------------------------------------- TrainConfig

namespace {
template <typename T>
const T& per_view(const std::vector<T>& values, std::size_t view, const char* name) {
  if (values.empty()) throw std::invalid_argument(std::string("config: ") + name + " is empty");
  if (values.size() == 1) return values.front();
  if (view >= values.size())
    throw std::invalid_argument(std::string("config: ") + name + " has no entry for view " + std::to_string(view));
  return values[view];
}
}  // namespace

const std::vector<Index>& TrainConfig::hidden_for(std::size_t view) const {
  return per_view(hidden_widths, view, "hidden_widths");
}
double TrainConfig::lambda_for(std::size_t view) const { return per_view(lambdas, view, "lambdas"); }
double TrainConfig::lr_net_for(std::size_t view) const { return per_view(lr_net, view, "lr_net"); }

Index selection_size(Index p, double r_fraction) {
  if (!(r_fraction > 0.0 && r_fraction <= 1.0))
    throw std::invalid_argument("selection fraction must lie in (0, 1], got " + std::to_string(r_fraction));
  // The small offset keeps products like 0.1 * 500 from rounding up to 51.
  const auto k = static_cast<Index>(std::ceil(r_fraction * static_cast<double>(p) - 1e-9));
  return std::clamp<Index>(k, 1, p);
}

Index latent_upper_bound(const std::vector<Index>& view_dims, double r_fraction) {
  if (view_dims.empty()) throw std::invalid_argument("latent_upper_bound: no views");
  Index bound = selection_size(view_dims.front(), r_fraction);
  for (Index p : view_dims) bound = std::min(bound, selection_size(p, r_fraction));
  return bound;
}

void validate_config(const TrainConfig& cfg, const std::vector<Index>& view_dims) {
  const std::size_t D = view_dims.size();
  if (cfg.K < 1) throw std::invalid_argument("config: K must be at least 1");
  const Index bound = latent_upper_bound(view_dims, cfg.r_fraction);
  if (cfg.K > bound)
    throw std::invalid_argument("config: K = " + std::to_string(cfg.K) + " exceeds the upper bound " +
                                std::to_string(bound) + " (smallest selection size)");
  if (cfg.max_iters < 0) throw std::invalid_argument("config: max_iters must be >= 0");
  if (!(cfg.lr_z > 0.0)) throw std::invalid_argument("config: lr_z must be positive");
  if (!(cfg.rel_tol >= 0.0)) throw std::invalid_argument("config: rel_tol must be >= 0");
  for (const auto* name : {"hidden_widths", "lambdas", "lr_net"}) {
    const std::size_t count = std::string(name) == "hidden_widths" ? cfg.hidden_widths.size()
                              : std::string(name) == "lambdas"     ? cfg.lambdas.size()
                                                                   : cfg.lr_net.size();
    if (count != 1 && count != D)
      throw std::invalid_argument(std::string("config: ") + name + " needs 1 or " + std::to_string(D) +
                                  " entries, got " + std::to_string(count));
  }
  for (std::size_t d = 0; d < D; ++d) {
    if (!(cfg.lambda_for(d) >= 0.0)) throw std::invalid_argument("config: lambdas must be >= 0");
    if (!(cfg.lr_net_for(d) > 0.0)) throw std::invalid_argument("config: lr_net must be positive");
    for (Index w : cfg.hidden_for(d))
      if (w < 1) throw std::invalid_argument("config: hidden widths must be positive");
  }
  if (!(cfg.svm_c > 0.0)) throw std::invalid_argument("config: svm_c must be positive");
  if (cfg.svm_gamma && !(*cfg.svm_gamma > 0.0)) throw std::invalid_argument("config: svm_gamma must be positive");
}

// -------------------------------------------------------------------- training

namespace {

struct NetworkOptimizer {
  std::vector<AdamState<double>> W, b, gamma, beta;

  explicit NetworkOptimizer(const DecoderNetwork& net) {
    for (const auto& l : net.layers) {
      W.push_back(AdamState<double>::like(l.W));
      b.push_back(AdamState<double>::like(l.b));
      gamma.push_back(AdamState<double>::like(l.gamma));
      beta.push_back(AdamState<double>::like(l.beta));
    }
  }

  void step(DecoderNetwork& net, const GradientBundle& g, double lr) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto& layer = net.layers[l];
      adam_step(layer.W, g.layers[l].dW, W[l], lr);
      adam_step(layer.b, g.layers[l].db, b[l], lr);
      if (layer.spec.group_norm) {
        adam_step(layer.gamma, g.layers[l].dgamma, gamma[l], lr);
        adam_step(layer.beta, g.layers[l].dbeta, beta[l], lr);
      }
    }
  }
};

using LossFn = std::function<double(const std::vector<Matrix>&, std::vector<Matrix>*)>;

struct AlternatingOptions {
  int stage = 1;
  bool project_latent = false;
  bool train_networks = true;
};

// One ADAM step on all network parameters with the latent code fixed, then one
// ADAM step on the latent code with the parameters fixed, per iteration.
FitResult run_alternating(std::vector<DecoderNetwork> nets, Matrix z, const TrainConfig& cfg, const LossFn& loss,
                          const AlternatingOptions& opt, const LatentObserver& observer) {
  const std::size_t D = nets.size();
  FitResult result;
  result.stage = opt.stage;

  std::vector<NetworkOptimizer> net_opts;
  for (const auto& net : nets) net_opts.emplace_back(net);
  auto z_opt = AdamState<double>::like(z);

  if (opt.project_latent) project_rows_unit_ball_inplace(z);
  if (observer) observer(0, z);

  std::vector<ForwardCache<double>> caches(D);
  std::vector<Matrix> recons(D);
  std::vector<Matrix> grads;
  auto evaluate = [&](int iteration) {
    for (std::size_t d = 0; d < D; ++d) recons[d] = forward(nets[d], z, &caches[d]);
    const double value = loss(recons, &grads);
    if (!std::isfinite(value))
      throw TrainingError("stage " + std::to_string(opt.stage) + ": non-finite loss at iteration " +
                              std::to_string(iteration),
                          iteration);
    return value;
  };

  double previous = evaluate(0);
  result.loss_trace.push_back(previous);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (opt.train_networks) {
      for (std::size_t d = 0; d < D; ++d) {
        const auto g = backward(nets[d], z, grads[d], caches[d], GradientParts::parameters);
        net_opts[d].step(nets[d], g, cfg.lr_net_for(d));
      }
      evaluate(it);
    }
    Matrix dz = Matrix::Zero(z.rows(), z.cols());
    for (std::size_t d = 0; d < D; ++d) dz += backward(nets[d], z, grads[d], caches[d], GradientParts::latent).dZ;
    adam_step(z, dz, z_opt, cfg.lr_z);
    if (opt.project_latent) project_rows_unit_ball_inplace(z);
    if (observer) observer(it, z);

    const double current = evaluate(it);
    result.loss_trace.push_back(current);
    result.iterations_run = it;
    const double change = std::abs(current - previous) / std::max(1.0, std::abs(previous));
    previous = current;
    if (change < cfg.rel_tol) {
      result.converged = true;
      break;
    }
  }
  result.networks = std::move(nets);
  result.latent = std::move(z);
  return result;
}

std::vector<Index> view_dims_of(const MultiviewDataset& data) {
  std::vector<Index> dims;
  for (const auto& v : data.views) dims.push_back(v.cols());
  return dims;
}

std::vector<DecoderNetwork> init_networks(const MultiviewDataset& data, const TrainConfig& cfg, const Rng& root,
                                          const char* stream) {
  std::vector<DecoderNetwork> nets;
  for (std::size_t d = 0; d < data.views.size(); ++d) {
    Rng rng = root.substream(stream, d);
    nets.push_back(init_network(make_architecture(cfg.K, cfg.hidden_for(d), data.views[d].cols(), cfg.group_norm),
                                rng, static_cast<int>(d)));
  }
  return nets;
}

}  // namespace

FitResult stage1_train(const MultiviewDataset& data, const TrainConfig& cfg,
                       const std::optional<std::vector<Matrix>>& laplacians, const LatentObserver& observer) {
  validate_dataset(data);
  validate_config(cfg, view_dims_of(data));
  const std::size_t D = data.num_views();

  Stage1LossConfig loss_cfg;
  for (std::size_t d = 0; d < D; ++d) loss_cfg.lambdas.push_back(cfg.lambda_for(d));
  if (cfg.use_laplacian) {
    if (!laplacians) throw std::invalid_argument("stage1_train: use_laplacian is set but no Laplacians were given");
    if (laplacians->size() != D) throw std::invalid_argument("stage1_train: need one Laplacian per view");
    loss_cfg.laplacians = laplacians;
  }

  const Rng root(cfg.seed);
  auto nets = init_networks(data, cfg, root, "stage1/network");
  Rng zrng = root.substream("stage1/latent");
  Matrix z = normal_matrix(data.num_samples(), cfg.K, zrng);

  const LossFn loss = [&](const std::vector<Matrix>& recons, std::vector<Matrix>* grads) {
    return stage1_loss(data.views, recons, loss_cfg, grads);
  };
  return run_alternating(std::move(nets), std::move(z), cfg, loss, {1, false, true}, observer);
}

FitResult stage2_train(const MultiviewDataset& data, const TrainConfig& cfg, const LatentObserver& observer) {
  validate_dataset(data);
  if (cfg.K < 1) throw std::invalid_argument("stage2_train: K must be at least 1");
  const Rng root(cfg.seed);
  auto nets = init_networks(data, cfg, root, "stage2/network");
  Rng zrng = root.substream("stage2/latent");
  Matrix z = normal_matrix(data.num_samples(), cfg.K, zrng);

  const LossFn loss = [&](const std::vector<Matrix>& recons, std::vector<Matrix>* grads) {
    return stage2_loss(data.views, recons, grads);
  };
  return run_alternating(std::move(nets), std::move(z), cfg, loss, {2, true, true}, observer);
}

FitResult stage3_infer(const MultiviewDataset& test_data, const std::vector<DecoderNetwork>& networks,
                       const TrainConfig& cfg, const LatentObserver& observer) {
  validate_dataset(test_data);
  if (networks.size() != test_data.num_views())
    throw std::invalid_argument("stage3_infer: " + std::to_string(networks.size()) + " networks for " +
                                std::to_string(test_data.num_views()) + " views");
  const Index K = networks.front().input_width();
  for (std::size_t d = 0; d < networks.size(); ++d) {
    if (networks[d].output_width() != test_data.views[d].cols())
      throw std::invalid_argument("stage3_infer: view " + std::to_string(d) + " has " +
                                  std::to_string(test_data.views[d].cols()) + " columns, trained network outputs " +
                                  std::to_string(networks[d].output_width()));
    if (networks[d].input_width() != K) throw std::invalid_argument("stage3_infer: networks disagree on K");
  }
  const Rng root(cfg.seed);
  Rng zrng = root.substream("stage3/latent");
  Matrix z = normal_matrix(test_data.num_samples(), K, zrng);

  const LossFn loss = [&](const std::vector<Matrix>& recons, std::vector<Matrix>* grads) {
    return stage3_loss(test_data.views, recons, grads);
  };
  return run_alternating(networks, std::move(z), cfg, loss, {3, true, false}, observer);
}

std::vector<Matrix> reconstruct(const std::vector<DecoderNetwork>& networks, const Matrix& latent) {
  std::vector<Matrix> out;
  for (const auto& net : networks) out.push_back(forward(net, latent));
  return out;
}

// ------------------------------------------------------------------- selection

FeatureSelection rank_features_top_k(const std::vector<Matrix>& recons, const std::vector<Index>& counts) {
  if (counts.size() != recons.size()) throw std::invalid_argument("rank_features: one count per view required");
  FeatureSelection sel;
  for (std::size_t d = 0; d < recons.size(); ++d) {
    const Index p = recons[d].cols();
    if (counts[d] < 1 || counts[d] > p)
      throw std::invalid_argument("rank_features: count " + std::to_string(counts[d]) + " outside [1, " +
                                  std::to_string(p) + "] for view " + std::to_string(d));
    Vector scores = recons[d].colwise().norm().transpose();
    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      return scores(a) > scores(b) || (scores(a) == scores(b) && a < b);
    });
    std::vector<Index> chosen(order.begin(), order.begin() + counts[d]);
    std::sort(chosen.begin(), chosen.end());
    sel.scores.push_back(std::move(scores));
    sel.indices.push_back(std::move(chosen));
  }
  return sel;
}

FeatureSelection rank_features(const std::vector<Matrix>& recons, double r_fraction) {
  std::vector<Index> counts;
  for (const auto& r : recons) counts.push_back(selection_size(r.cols(), r_fraction));
  auto sel = rank_features_top_k(recons, counts);
  sel.r_fraction = r_fraction;
  return sel;
}

Matrix select_columns(const Matrix& m, const std::vector<Index>& columns) {
  for (Index c : columns)
    if (c < 0 || c >= m.cols())
      throw std::invalid_argument("select_columns: index " + std::to_string(c) + " outside [0, " +
                                  std::to_string(m.cols()) + ")");
  return m(Eigen::all, columns);
}

MultiviewDataset subset_views(const MultiviewDataset& data, const std::vector<std::vector<Index>>& indices) {
  if (indices.size() != data.views.size()) throw std::invalid_argument("subset_views: one index set per view required");
  MultiviewDataset out;
  out.labels = data.labels;
  for (std::size_t d = 0; d < data.views.size(); ++d) {
    std::vector<Index> sorted = indices[d];
    std::sort(sorted.begin(), sorted.end());
    out.views.push_back(select_columns(data.views[d], sorted));
  }
  return out;
}

MultiviewDataset subset_views(const MultiviewDataset& data, const FeatureSelection& selection) {
  return subset_views(data, selection.indices);
}

// -------------------------------------------------------------- random search

TrainConfig apply_overrides(const TrainConfig& base, const std::map<std::string, double>& values) {
  TrainConfig cfg = base;
  for (const auto& [key, v] : values) {
    if (key == "K")
      cfg.K = static_cast<Index>(std::llround(v));
    else if (key == "lambda")
      cfg.lambdas = {v};
    else if (key == "lr_net")
      cfg.lr_net = {v};
    else if (key == "lr_z")
      cfg.lr_z = v;
    else if (key == "max_iters")
      cfg.max_iters = static_cast<int>(std::llround(v));
    else if (key == "r_fraction")
      cfg.r_fraction = v;
    else if (key == "svm_c")
      cfg.svm_c = v;
    else if (key == "svm_gamma")
      cfg.svm_gamma = v;
    else
      throw std::invalid_argument("search space: unknown hyperparameter '" + key + "'");
  }
  return cfg;
}

std::vector<TrainConfig> random_search(const SearchSpace& space, std::size_t n_draws, std::uint64_t seed,
                                       const TrainConfig& base, const std::vector<Index>& view_dims,
                                       std::vector<std::map<std::string, double>>* drawn) {
  if (space.empty()) throw std::invalid_argument("random_search: empty search space");
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (const auto& [name, values] : space) {
    std::vector<double> kept = values;
    if (name == "K") {
      const double r = space.count("r_fraction") ? *std::min_element(space.at("r_fraction").begin(),
                                                                      space.at("r_fraction").end())
                                                 : base.r_fraction;
      const Index bound = latent_upper_bound(view_dims, r);
      std::erase_if(kept, [bound](double k) { return k < 1.0 || k > static_cast<double>(bound); });
    }
    if (kept.empty()) throw std::invalid_argument("random_search: no admissible values for '" + name + "'");
    axes.emplace_back(name, std::move(kept));
  }
  std::uint64_t total = 1;
  for (const auto& [name, values] : axes) total *= values.size();
  if (n_draws > total)
    throw std::invalid_argument("random_search: " + std::to_string(n_draws) + " draws requested from " +
                                std::to_string(total) + " combinations");

  // Partial Fisher-Yates over the virtual array [0, total).
  Rng rng = Rng(seed).substream("search");
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;
  auto at = [&](std::uint64_t i) {
    const auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<TrainConfig> out;
  for (std::uint64_t k = 0; k < n_draws; ++k) {
    const std::uint64_t j = k + rng.below(total - k);
    const std::uint64_t pick = at(j);
    swapped[j] = at(k);
    std::map<std::string, double> values;
    std::uint64_t rest = pick;
    for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
      values[it->first] = it->second[rest % it->second.size()];
      rest /= it->second.size();
    }
    out.push_back(apply_overrides(base, values));
    if (drawn) drawn->push_back(std::move(values));
  }
  return out;
}

}  // namespace mvsel
