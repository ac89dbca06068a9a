#include "mvsel/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "mvsel/rng.hpp"

namespace mvsel {

double rbf_kernel(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b, double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

namespace {

Matrix rbf_gram(const Matrix& a, const Matrix& b, double gamma) {
  const Vector an = a.rowwise().squaredNorm();
  const Vector bn = b.rowwise().squaredNorm();
  Matrix d2 = -2.0 * a * b.transpose();
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  return (-gamma * d2.array().max(0.0)).exp().matrix();
}

// Dual coordinate descent over maximal-violating pairs with second-order
// working-set selection; stops when m(alpha) - M(alpha) <= tol.
BinarySvm fit_binary(const Matrix& x, const Matrix& gram, const std::vector<int>& y, const SvmOptions& opts) {
  const Index n = x.rows();
  const double C = opts.C;
  constexpr double tau = 1e-12;
  Vector alpha = Vector::Zero(n);
  Vector G = Vector::Constant(n, -1.0);
  auto in_up = [&](Index t) { return (y[t] == 1 && alpha(t) < C) || (y[t] == -1 && alpha(t) > 0); };
  auto in_low = [&](Index t) { return (y[t] == 1 && alpha(t) > 0) || (y[t] == -1 && alpha(t) < C); };

  const long long max_iter = static_cast<long long>(std::max(opts.max_passes, 1)) * std::max<Index>(n, 10);
  BinarySvm out;
  long long iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    double m = -std::numeric_limits<double>::infinity();
    Index i = -1;
    for (Index t = 0; t < n; ++t)
      if (in_up(t) && -y[t] * G(t) > m) {
        m = -y[t] * G(t);
        i = t;
      }
    double M = std::numeric_limits<double>::infinity();
    Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * G(t);
      M = std::min(M, v);
      if (i >= 0 && v < m) {
        const double b = m - v;
        double a = gram(i, i) + gram(t, t) - 2.0 * gram(i, t);
        if (a <= 0) a = tau;
        const double score = -b * b / a;
        if (score < best) {
          best = score;
          j = t;
        }
      }
    }
    gap = (i < 0 || !std::isfinite(M)) ? 0.0 : m - M;
    if (gap <= opts.tol || j < 0 || iter >= max_iter) break;

    const double Qij = y[i] * y[j] * gram(i, j);
    const double old_i = alpha(i), old_j = alpha(j);
    if (y[i] != y[j]) {
      double quad = gram(i, i) + gram(j, j) + 2.0 * Qij;
      if (quad <= 0) quad = tau;
      const double delta = (-G(i) - G(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) {
          alpha(j) = 0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = -diff;
      }
      if (diff > 0) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = C - diff;
        }
      } else if (alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = C + diff;
      }
    } else {
      double quad = gram(i, i) + gram(j, j) - 2.0 * Qij;
      if (quad <= 0) quad = tau;
      const double delta = (G(i) - G(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = sum - C;
        }
      } else if (alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = sum;
      }
      if (sum > C) {
        if (alpha(j) > C) {
          alpha(j) = C;
          alpha(i) = sum - C;
        }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - old_i, dj = alpha(j) - old_j;
    for (Index t = 0; t < n; ++t)
      G(t) += y[t] * (y[i] * gram(t, i) * di + y[j] * gram(t, j) * dj);
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  Index n_free = 0;
  for (Index t = 0; t < n; ++t) {
    const double yG = y[t] * G(t);
    if (alpha(t) >= C) {
      if (y[t] == -1) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else if (alpha(t) <= 0) {
      if (y[t] == 1) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else {
      ++n_free;
      sum_free += yG;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

  std::vector<Index> sv;
  for (Index t = 0; t < n; ++t)
    if (alpha(t) > 0) sv.push_back(t);
  out.support = x(sv, Eigen::all);
  out.coef.resize(static_cast<Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) out.coef(static_cast<Index>(k)) = alpha(sv[k]) * y[sv[k]];
  out.bias = -rho;
  out.alpha = std::move(alpha);
  out.y = y;
  out.iterations = static_cast<int>(iter);
  out.final_gap = gap;
  return out;
}

}  // namespace

SvmModel svm_fit(const Matrix& x, const std::vector<int>& labels, const SvmOptions& opts) {
  if (x.rows() < 2) throw std::invalid_argument("svm_fit: need at least 2 samples");
  if (static_cast<Index>(labels.size()) != x.rows())
    throw std::invalid_argument("svm_fit: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(x.rows()) + " samples");
  if (!(opts.C > 0) || !(opts.gamma > 0) || !(opts.tol > 0))
    throw std::invalid_argument("svm_fit: C, gamma and tol must be positive");
  SvmModel model;
  model.C = opts.C;
  model.gamma = opts.gamma;
  model.tol = opts.tol;
  model.num_features = x.cols();
  const std::set<int> distinct(labels.begin(), labels.end());
  model.classes.assign(distinct.begin(), distinct.end());
  if (model.classes.size() < 2) throw std::invalid_argument("svm_fit: need at least two classes");

  const Matrix gram = rbf_gram(x, x, opts.gamma);
  auto targets = [&](int positive) {
    std::vector<int> y(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t) y[t] = labels[t] == positive ? 1 : -1;
    return y;
  };
  if (model.classes.size() == 2) {
    model.submodels.push_back(fit_binary(x, gram, targets(model.classes[1]), opts));
    model.submodels.back().positive_class = model.classes[1];
  } else {
    for (int c : model.classes) {
      model.submodels.push_back(fit_binary(x, gram, targets(c), opts));
      model.submodels.back().positive_class = c;
    }
  }
  return model;
}

Matrix svm_decision_values(const SvmModel& model, const Matrix& x) {
  if (x.rows() > 0 && x.cols() != model.num_features)
    throw std::invalid_argument("svm_predict: expected " + std::to_string(model.num_features) + " features, got " +
                                std::to_string(x.cols()));
  Matrix values(x.rows(), static_cast<Index>(model.submodels.size()));
  for (std::size_t s = 0; s < model.submodels.size(); ++s) {
    const auto& sub = model.submodels[s];
    if (x.rows() == 0) continue;
    if (sub.support.rows() == 0) {
      values.col(static_cast<Index>(s)).setConstant(sub.bias);
      continue;
    }
    values.col(static_cast<Index>(s)) = (rbf_gram(x, sub.support, model.gamma) * sub.coef).array() + sub.bias;
  }
  return values;
}

std::vector<int> svm_predict(const SvmModel& model, const Matrix& x) {
  const Matrix values = svm_decision_values(model, x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    if (model.submodels.size() == 1) {
      out[i] = values(i, 0) > 0 ? model.classes[1] : model.classes[0];
    } else {
      Index best = 0;
      for (Index s = 1; s < values.cols(); ++s)
        if (values(i, s) > values(i, best)) best = s;
      out[i] = model.classes[best];
    }
  }
  return out;
}

// --------------------------------------------------------------------- K-means

double kmeans_inertia(const Matrix& x, const Matrix& centroids, const std::vector<Index>& assignments) {
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) total += (x.row(i) - centroids.row(assignments[i])).squaredNorm();
  return total;
}

namespace {

// Nearest centroid, ties to the lower index. Returns the inertia.
double assign(const Matrix& x, const Matrix& centroids, std::vector<Index>& labels, Vector& dist2) {
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    Index best = 0;
    double best_d = (x.row(i) - centroids.row(0)).squaredNorm();
    for (Index c = 1; c < centroids.rows(); ++c) {
      const double d = (x.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    labels[i] = best;
    dist2(i) = best_d;
    total += best_d;
  }
  return total;
}

Matrix kmeanspp_seed(const Matrix& x, Index k, Rng& rng) {
  const Index n = x.rows();
  Matrix centroids(k, x.cols());
  centroids.row(0) = x.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  Vector d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = 0;
    if (total > 0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, Index k, std::uint64_t seed, int n_init, int max_iter) {
  const Index n = x.rows();
  if (k < 1) throw std::invalid_argument("kmeans: k must be at least 1");
  if (k > n)
    throw std::invalid_argument("kmeans: k = " + std::to_string(k) + " exceeds the number of points " +
                                std::to_string(n));
  if (n_init < 1 || max_iter < 0) throw std::invalid_argument("kmeans: n_init >= 1 and max_iter >= 0 required");

  const Rng root(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int run = 0; run < n_init; ++run) {
    Rng rng = root.substream("kmeans/restart", static_cast<std::uint64_t>(run));
    KMeansResult r;
    r.centroids = kmeanspp_seed(x, k, rng);
    r.assignments.assign(static_cast<std::size_t>(n), 0);
    Vector dist2(n);
    r.inertia = assign(x, r.centroids, r.assignments, dist2);
    r.inertia_trace.push_back(r.inertia);
    for (int it = 1; it <= max_iter; ++it) {
      Matrix sums = Matrix::Zero(k, x.cols());
      std::vector<Index> counts(static_cast<std::size_t>(k), 0);
      for (Index i = 0; i < n; ++i) {
        sums.row(r.assignments[i]) += x.row(i);
        ++counts[r.assignments[i]];
      }
      for (Index c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          r.centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        } else {
          // Empty cluster: move it onto the point farthest from its centroid.
          Index far = 0;
          dist2.maxCoeff(&far);
          r.centroids.row(c) = x.row(far);
          dist2(far) = 0.0;
        }
      }
      const std::vector<Index> previous = r.assignments;
      r.inertia = assign(x, r.centroids, r.assignments, dist2);
      r.inertia_trace.push_back(r.inertia);
      r.iterations = it;
      if (r.assignments == previous) break;
    }
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

// --------------------------------------------------------------------- metrics

SelectionMetrics selection_metrics(const std::vector<Index>& selected, const std::vector<Index>& truth, Index p) {
  if (truth.empty()) throw std::invalid_argument("selection_metrics: empty truth set");
  const std::set<Index> s(selected.begin(), selected.end());
  const std::set<Index> t(truth.begin(), truth.end());
  for (Index v : s)
    if (v < 0 || v >= p) throw std::invalid_argument("selection_metrics: selected index " + std::to_string(v) + " out of range");
  for (Index v : t)
    if (v < 0 || v >= p) throw std::invalid_argument("selection_metrics: truth index " + std::to_string(v) + " out of range");
  Index hits = 0;
  for (Index v : s) hits += t.count(v) ? 1 : 0;
  const Index false_pos = static_cast<Index>(s.size()) - hits;
  const Index negatives = p - static_cast<Index>(t.size());
  SelectionMetrics m;
  m.tpr = static_cast<double>(hits) / static_cast<double>(t.size());
  m.fpr = negatives > 0 ? static_cast<double>(false_pos) / static_cast<double>(negatives) : 0.0;
  m.precision = s.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(s.size());
  m.f_measure = (m.precision + m.tpr) > 0 ? 2.0 * m.precision * m.tpr / (m.precision + m.tpr) : 0.0;
  return m;
}

double error_rate(const std::vector<int>& predicted, const std::vector<int>& actual) {
  if (predicted.size() != actual.size())
    throw std::invalid_argument("error_rate: " + std::to_string(predicted.size()) + " predictions for " +
                                std::to_string(actual.size()) + " labels");
  if (actual.empty()) throw std::invalid_argument("error_rate: empty label vectors");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) wrong += predicted[i] != actual[i] ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(actual.size());
}

}  // namespace mvsel
