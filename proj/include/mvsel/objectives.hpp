#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvsel/ndcore.hpp"

namespace mvsel {

// Sum over columns of the column l2 norms.
template <typename Derived>
typename Derived::Scalar l21_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.colwise().norm().sum();
}

// sum_j sqrt(||m_j||^2 + eps^2), the differentiable surrogate used in training.
template <typename Derived>
typename Derived::Scalar l21_norm_smoothed(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  return (m.colwise().squaredNorm().array() + eps * eps).sqrt().sum() + Scalar(0);
}

template <typename Derived>
MatrixX<typename Derived::Scalar> l21_grad_smoothed(const Eigen::MatrixBase<Derived>& m,
                                                    typename Derived::Scalar eps) {
  if (!(eps > 0)) throw std::invalid_argument("l21_grad_smoothed: eps must be positive");
  const RowVectorX<typename Derived::Scalar> denom = (m.colwise().squaredNorm().array() + eps * eps).sqrt();
  return (m.array().rowwise() / denom.array()).matrix();
}

struct Stage1LossConfig {
  std::vector<double> lambdas;                   // one per view
  std::optional<std::vector<Matrix>> laplacians;  // normalized Laplacians, p_d x p_d
  double smoothing_eps = 1e-8;
};

namespace detail {
inline void check_same_shape(const Matrix& a, const Matrix& b, const char* what, std::size_t view) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": view " + std::to_string(view) + " shape mismatch (" +
                                shape_string(a) + " vs " + shape_string(b) + ")");
}
}  // namespace detail

// sum_d ||X_d - G_d||_{2,1} + lambda_d ||G_d (L_d)||_{2,1}, both eps-smoothed.
// When grads is non-null it receives d loss / d G_d per view.
inline double stage1_loss(std::span<const Matrix> views, std::span<const Matrix> recons, const Stage1LossConfig& cfg,
                          std::vector<Matrix>* grads = nullptr) {
  if (views.size() != recons.size()) throw std::invalid_argument("stage1_loss: view/reconstruction count mismatch");
  if (cfg.lambdas.size() != views.size())
    throw std::invalid_argument("stage1_loss: expected " + std::to_string(views.size()) + " lambdas, got " +
                                std::to_string(cfg.lambdas.size()));
  if (cfg.laplacians && cfg.laplacians->size() != views.size())
    throw std::invalid_argument("stage1_loss: laplacian count mismatch");
  const double eps = cfg.smoothing_eps;
  if (grads) grads->resize(views.size());
  double total = 0.0;
  for (std::size_t d = 0; d < views.size(); ++d) {
    detail::check_same_shape(views[d], recons[d], "stage1_loss", d);
    const Matrix residual = views[d] - recons[d];
    total += l21_norm_smoothed(residual, eps);
    const bool smoothed = cfg.laplacians.has_value();
    Matrix penalized;
    if (smoothed) {
      const Matrix& lap = (*cfg.laplacians)[d];
      if (lap.rows() != recons[d].cols() || lap.cols() != recons[d].cols())
        throw std::invalid_argument("stage1_loss: laplacian for view " + std::to_string(d) + " is " +
                                    shape_string(lap) + ", expected " + std::to_string(recons[d].cols()) + " square");
      penalized.noalias() = recons[d] * lap;
    }
    const Matrix& pen = smoothed ? penalized : recons[d];
    total += cfg.lambdas[d] * l21_norm_smoothed(pen, eps);
    if (grads) {
      Matrix g = -l21_grad_smoothed(residual, eps);
      if (smoothed)
        g.noalias() += cfg.lambdas[d] * l21_grad_smoothed(pen, eps) * (*cfg.laplacians)[d].transpose();
      else
        g += cfg.lambdas[d] * l21_grad_smoothed(pen, eps);
      (*grads)[d] = std::move(g);
    }
  }
  return total;
}

// sum_d ||X'_d - R_d||_F^2, with d loss / d R_d = 2 (R_d - X'_d).
inline double stage2_loss(std::span<const Matrix> views, std::span<const Matrix> recons,
                          std::vector<Matrix>* grads = nullptr) {
  if (views.size() != recons.size()) throw std::invalid_argument("stage2_loss: view/reconstruction count mismatch");
  if (grads) grads->resize(views.size());
  double total = 0.0;
  for (std::size_t d = 0; d < views.size(); ++d) {
    detail::check_same_shape(views[d], recons[d], "stage2_loss", d);
    const Matrix diff = recons[d] - views[d];
    total += diff.squaredNorm();
    if (grads) (*grads)[d] = 2.0 * diff;
  }
  return total;
}

// Same functional form as stage 2; only the latent code varies at test time.
inline double stage3_loss(std::span<const Matrix> test_views, std::span<const Matrix> recons,
                          std::vector<Matrix>* grads = nullptr) {
  return stage2_loss(test_views, recons, grads);
}

}  // namespace mvsel
