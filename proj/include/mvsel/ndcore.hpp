#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mvsel {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// ---------------------------------------------------------------- activations

template <std::floating_point Scalar>
Scalar elu(Scalar x, Scalar alpha = Scalar(1)) {
  return x > Scalar(0) ? x : alpha * std::expm1(x);
}

// One-sided derivative from the left at 0, which equals 1 when alpha == 1.
template <std::floating_point Scalar>
Scalar elu_derivative(Scalar x, Scalar alpha = Scalar(1)) {
  return x > Scalar(0) ? Scalar(1) : alpha * std::exp(x);
}

template <typename Derived>
auto elu(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar alpha = 1) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([alpha](Scalar v) { return elu(v, alpha); });
}

template <typename Derived>
auto elu_derivative(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar alpha = 1) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([alpha](Scalar v) { return elu_derivative(v, alpha); });
}

// ----------------------------------------------------------------------- ADAM

template <typename Scalar>
struct AdamState {
  MatrixX<Scalar> m;
  MatrixX<Scalar> v;
  std::int64_t t = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  AdamState() = default;
  AdamState(Index rows, Index cols)
      : m(MatrixX<Scalar>::Zero(rows, cols)), v(MatrixX<Scalar>::Zero(rows, cols)) {}

  template <typename Derived>
  static AdamState like(const Eigen::MatrixBase<Derived>& param) {
    return AdamState(param.rows(), param.cols());
  }
};

template <typename Derived, typename GradDerived>
void adam_step(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<GradDerived>& grad,
               AdamState<typename Derived::Scalar>& state, typename Derived::Scalar lr) {
  using Scalar = typename Derived::Scalar;
  if (param.rows() != grad.rows() || param.cols() != grad.cols() || state.m.rows() != param.rows() ||
      state.m.cols() != param.cols() || state.v.rows() != param.rows() || state.v.cols() != param.cols())
    throw std::invalid_argument("adam_step: shape mismatch (param " + shape_string(param) + ", grad " +
                                shape_string(grad) + ", state " + shape_string(state.m) + ")");
  if (!(lr > Scalar(0))) throw std::invalid_argument("adam_step: learning rate must be positive");

  ++state.t;
  state.m = state.beta1 * state.m + (Scalar(1) - state.beta1) * grad.derived();
  state.v = state.beta2 * state.v + (Scalar(1) - state.beta2) * grad.derived().cwiseAbs2();
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.t));
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.t));
  const Scalar eps = state.eps;
  param.derived() -= (lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps)).matrix();
}

// ----------------------------------------------------------- row projections

// Rows whose norm exceeds 1 are scaled onto the unit sphere. Rows within
// 1e-12 of the sphere count as inside, which makes the map exactly idempotent.
template <typename Derived>
void project_rows_unit_ball_inplace(Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  for (Index i = 0; i < z.rows(); ++i) {
    const Scalar norm = z.row(i).norm();
    if (norm > Scalar(1) + Scalar(1e-12)) z.row(i) /= norm;
  }
}

template <typename Derived>
MatrixX<typename Derived::Scalar> project_rows_unit_ball(const Eigen::MatrixBase<Derived>& z) {
  MatrixX<typename Derived::Scalar> out = z;
  project_rows_unit_ball_inplace(out);
  return out;
}

// ------------------------------------------------------ finite differences

// Central differences, one coordinate at a time.
template <typename Scalar, typename Fn>
MatrixX<Scalar> finite_diff_grad(Fn&& f, const MatrixX<Scalar>& x, Scalar h = Scalar(1e-4)) {
  if (!(h > Scalar(0))) throw std::invalid_argument("finite_diff_grad: step must be positive");
  MatrixX<Scalar> grad(x.rows(), x.cols());
  MatrixX<Scalar> probe = x;
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const Scalar orig = probe(i, j);
      probe(i, j) = orig + h;
      const Scalar up = f(probe);
      probe(i, j) = orig - h;
      const Scalar down = f(probe);
      probe(i, j) = orig;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::runtime_error("finite_diff_grad: non-finite function value at entry (" + std::to_string(i) +
                                 ", " + std::to_string(j) + ")");
      grad(i, j) = (up - down) / (Scalar(2) * h);
    }
  }
  return grad;
}

// ------------------------------------------------------------ standardization

template <typename Scalar>
struct ColumnStats {
  RowVectorX<Scalar> mean;
  RowVectorX<Scalar> sd;  // sample sd (divisor n-1); 1 marks a degenerate column
};

inline constexpr double kDegenerateSd = 1e-12;

template <typename Derived>
ColumnStats<typename Derived::Scalar> standardize_fit(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.rows() < 2) throw std::invalid_argument("standardize_fit: need at least 2 rows, got " + std::to_string(x.rows()));
  ColumnStats<Scalar> stats;
  stats.mean = x.colwise().mean();
  const MatrixX<Scalar> centered = x.rowwise() - stats.mean;
  stats.sd = (centered.colwise().squaredNorm() / Scalar(x.rows() - 1)).cwiseSqrt();
  for (Index j = 0; j < stats.sd.size(); ++j)
    if (stats.sd(j) < Scalar(kDegenerateSd)) stats.sd(j) = Scalar(1);
  return stats;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> standardize_apply(const Eigen::MatrixBase<Derived>& x,
                                                    const ColumnStats<typename Derived::Scalar>& stats) {
  if (x.cols() != stats.mean.size())
    throw std::invalid_argument("standardize_apply: expected " + std::to_string(stats.mean.size()) + " columns, got " +
                                std::to_string(x.cols()));
  return ((x.rowwise() - stats.mean).array().rowwise() / stats.sd.array()).matrix();
}

template <typename Derived>
MatrixX<typename Derived::Scalar> standardize_invert(const Eigen::MatrixBase<Derived>& x,
                                                     const ColumnStats<typename Derived::Scalar>& stats) {
  if (x.cols() != stats.mean.size()) throw std::invalid_argument("standardize_invert: column count mismatch");
  return ((x.array().rowwise() * stats.sd.array()).matrix().rowwise() + stats.mean);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace mvsel
