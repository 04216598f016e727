#include "tvising/errors.hpp"
#include "tvising/solver.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace tvising {

namespace {

// log(e^z + e^-z) without overflow.
inline double log_2cosh(double z) {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a));
}

}  // namespace

void PenaltyConfig::validate() const {
  if (!std::isfinite(lambda1) || lambda1 < 0.0)
    throw ValidationError("lambda1 must be finite and >= 0");
  if (!std::isfinite(lambda2) || lambda2 < 0.0)
    throw ValidationError("lambda2 must be finite and >= 0");
}

void SolverOptions::validate() const {
  if (max_outer_iter < 1) throw ValidationError("max_outer_iter must be >= 1");
  if (!(tol_outer > 0.0) || !(tol_inner > 0.0) || !(tol_stationarity > 0.0))
    throw ValidationError("solver tolerances must be > 0");
  if (max_inner_iter < 1) throw ValidationError("max_inner_iter must be >= 1");
  if (certificate_directions < 0) throw ValidationError("certificate_directions must be >= 0");
}

NodeProblem::NodeProblem(const SpinDataset& data, int node) : node_(node) {
  data.validate();
  if (node < 0 || node >= data.p)
    throw ValidationError("node " + std::to_string(node + 1) + " out of range 1.." +
                          std::to_string(data.p));
  const int p = data.p;
  const int total = data.total_observations();
  x_.resize(total, p - 1);
  y_.resize(total);
  offsets_.assign(1, 0);
  Eigen::Index row = 0;
  for (const auto& block : data.blocks) {
    for (Eigen::Index r = 0; r < block.rows(); ++r, ++row) {
      y_(row) = block(r, node);
      for (int b = 0, k = 0; b < p; ++b)
        if (b != node) x_(row, k++) = block(r, b);
    }
    offsets_.push_back(row);
    // lambda_max(X_i^T X_i) via the smaller Gram matrix.
    const auto xi = x_.middleRows(offsets_[offsets_.size() - 2], block.rows());
    const Eigen::MatrixXd gram =
        xi.rows() <= xi.cols() ? Eigen::MatrixXd(xi * xi.transpose())
                               : Eigen::MatrixXd(xi.transpose() * xi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    lipschitz_ = std::max(lipschitz_, es.eigenvalues().maxCoeff());
  }
}

double NodeProblem::crude_lipschitz() const {
  return static_cast<double>(x_.cols()) * static_cast<double>(x_.rows());
}

void NodeProblem::check_shape(const Eigen::MatrixXd& beta) const {
  if (beta.rows() != dim() || beta.cols() != n())
    throw ValidationError("beta must be " + std::to_string(dim()) + " x " + std::to_string(n()) +
                          ", got " + std::to_string(beta.rows()) + " x " +
                          std::to_string(beta.cols()));
}

double NodeProblem::loss(const Eigen::MatrixXd& beta) const {
  check_shape(beta);
  double value = 0.0;
  for (int i = 0; i < n(); ++i) {
    const Eigen::Index off = offsets_[i];
    const Eigen::Index len = offsets_[i + 1] - off;
    const Eigen::VectorXd z = x_.middleRows(off, len) * beta.col(i);
    for (Eigen::Index l = 0; l < len; ++l) value += log_2cosh(z(l)) - y_(off + l) * z(l);
  }
  return value;
}

double NodeProblem::loss_and_gradient(const Eigen::MatrixXd& beta, Eigen::MatrixXd& grad) const {
  check_shape(beta);
  grad.resize(dim(), n());
  double value = 0.0;
  Eigen::VectorXd residual;
  for (int i = 0; i < n(); ++i) {
    const Eigen::Index off = offsets_[i];
    const Eigen::Index len = offsets_[i + 1] - off;
    const auto xi = x_.middleRows(off, len);
    const Eigen::VectorXd z = xi * beta.col(i);
    residual.resize(len);
    for (Eigen::Index l = 0; l < len; ++l) {
      value += log_2cosh(z(l)) - y_(off + l) * z(l);
      residual(l) = std::tanh(z(l)) - y_(off + l);
    }
    grad.col(i).noalias() = xi.transpose() * residual;
  }
  return value;
}

LossAndGradient node_loss_and_gradient(const Eigen::MatrixXd& beta, const SpinDataset& data,
                                       int node) {
  const NodeProblem problem(data, node);
  LossAndGradient out;
  out.value = problem.loss_and_gradient(beta, out.gradient);
  return out;
}

double penalty_value(const Eigen::MatrixXd& beta, const PenaltyConfig& penalty) {
  double fused = 0.0;
  if (penalty.lambda1 != 0.0) {
    for (Eigen::Index i = 1; i < beta.cols(); ++i) {
      const auto diff = beta.col(i) - beta.col(i - 1);
      fused += penalty.fused_norm == FusedNorm::kGroupL2 ? diff.norm() : diff.lpNorm<1>();
    }
  }
  const double sparse = penalty.lambda2 != 0.0 ? beta.lpNorm<1>() : 0.0;
  return penalty.lambda1 * fused + penalty.lambda2 * sparse;
}

}  // namespace tvising
