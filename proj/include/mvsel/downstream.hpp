#pragma once

#include <cstdint>
#include <vector>

#include "mvsel/ndcore.hpp"

namespace mvsel {

struct BinarySvm {
  Matrix support;          // support vectors, one per row
  Vector coef;             // alpha_i * y_i for each support vector
  double bias = 0.0;
  int positive_class = 1;  // class mapped to y = +1
  // Dual solution over all training rows, kept for diagnostics.
  Vector alpha;
  std::vector<int> y;      // +1 / -1 per training row
  int iterations = 0;
  double final_gap = 0.0;  // max KKT violation m(alpha) - M(alpha) at exit
};

struct SvmModel {
  double C = 1.0;
  double gamma = 1.0;
  double tol = 1e-3;
  std::vector<int> classes;           // sorted ascending
  std::vector<BinarySvm> submodels;   // one for binary problems, one per class otherwise
  Index num_features = 0;
};

struct SvmOptions {
  double C = 1.0;
  double gamma = 1.0;
  double tol = 1e-3;
  int max_passes = 100;
};

SvmModel svm_fit(const Matrix& x, const std::vector<int>& labels, const SvmOptions& opts);
// Decision values per sub-model, one column each.
Matrix svm_decision_values(const SvmModel& model, const Matrix& x);
std::vector<int> svm_predict(const SvmModel& model, const Matrix& x);

double rbf_kernel(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b, double gamma);

struct KMeansResult {
  Matrix centroids;                   // k x dim
  std::vector<Index> assignments;     // length n
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_trace;  // after each assignment step of the winning restart
};

KMeansResult kmeans(const Matrix& x, Index k, std::uint64_t seed, int n_init = 10, int max_iter = 300);
double kmeans_inertia(const Matrix& x, const Matrix& centroids, const std::vector<Index>& assignments);

struct SelectionMetrics {
  double tpr = 0.0;
  double fpr = 0.0;
  double precision = 0.0;
  double f_measure = 0.0;
};

SelectionMetrics selection_metrics(const std::vector<Index>& selected, const std::vector<Index>& truth, Index p);
double error_rate(const std::vector<int>& predicted, const std::vector<int>& actual);

}  // namespace mvsel
