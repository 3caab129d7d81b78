#include "tdreg/regularizers.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tdreg/decomposition.hpp"
#include "tdreg/errors.hpp"
#include "tdreg/models.hpp"

namespace tdreg {

RegValue gaussian_prior_reg(const Eigen::MatrixXd& a, double sigma_m2) {
  if (!(sigma_m2 > 0.0)) throw DomainError("gaussian_prior_reg: sigma_m2 must be positive");
  const double dk = static_cast<double>(a.size());
  return {-0.5 * dk * std::log(2.0 * std::numbers::pi * sigma_m2) -
              a.squaredNorm() / (2.0 * sigma_m2),
          -a / sigma_m2};
}

RegValue transfer_l2_reg(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_prior) {
  if (a.rows() != a_prior.rows() || a.cols() != a_prior.cols())
    throw ShapeError("transfer_l2_reg: shape mismatch");
  const Eigen::MatrixXd diff = a - a_prior;
  const double norm = diff.norm();
  if (norm == 0.0) return {0.0, Eigen::MatrixXd::Zero(a.rows(), a.cols())};
  return {norm, diff / norm};
}

RegValue anti_correlation_reg(const Eigen::MatrixXd& a) {
  const Eigen::Index k = a.cols();
  const Eigen::MatrixXd gram = a.transpose() * a;
  const double value = gram.sum() - gram.trace();
  const Eigen::MatrixXd off = Eigen::MatrixXd::Ones(k, k) - Eigen::MatrixXd::Identity(k, k);
  return {value, 2.0 * a * off};
}

RegValue tree_reg(const Eigen::MatrixXd& a, const Eigen::MatrixXd& o_star) {
  if (o_star.rows() != a.rows() || o_star.cols() != a.rows())
    throw ShapeError("tree_reg: O* must be D×D with D=" + std::to_string(a.rows()));
  Eigen::MatrixXd off = o_star;
  off.diagonal().array() -= 1.0;
  const Eigen::MatrixXd grad = -(off * a);
  // −½ tr(Aᵀ(O* − I)A) = ½ ⟨A, −(O* − I)A⟩
  return {0.5 * (a.array() * grad.array()).sum(), grad};
}

RegValue dirichlet_sparsity_reg(const Eigen::MatrixXd& a, double alpha_a, double floor) {
  if (!(alpha_a > 0.0)) throw DomainError("dirichlet_sparsity_reg: alpha_a must be positive");
  if (!(floor > 0.0)) throw DomainError("dirichlet_sparsity_reg: floor must be positive");
  if (!a.allFinite()) throw DomainError("dirichlet_sparsity_reg: non-finite topic entry");
  const Eigen::Index d = a.rows();
  const double dd = static_cast<double>(d);
  const double log_norm = std::lgamma(alpha_a * dd) - dd * std::lgamma(alpha_a);
  RegValue out;
  out.grad.resize(a.rows(), a.cols());
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const Eigen::ArrayXd f = a.col(k).array().max(floor);
    const double s = f.sum();
    const Eigen::ArrayXd p = f / s;
    if ((p <= 0.0).any()) throw DomainError("dirichlet_sparsity_reg: nonpositive entry");
    out.value -= log_norm + (alpha_a - 1.0) * p.log().sum();
    // ∂/∂p, then through the renormalization p = f / Σf, then through the floor.
    const Eigen::ArrayXd gp = -(alpha_a - 1.0) / p;
    const Eigen::ArrayXd gf = (gp - (gp * p).sum()) / s;
    out.grad.col(k) = (a.col(k).array() > floor).select(gf, 0.0).matrix();
  }
  return out;
}

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::GaussianPrior: return "gaussian_prior";
    case RegularizerKind::TransferL2: return "transfer_l2";
    case RegularizerKind::AntiCorrelation: return "anti_correlation";
    case RegularizerKind::TreeDistance: return "tree_distance";
    case RegularizerKind::DirichletSparsity: return "dirichlet_sparsity";
  }
  return "unknown";
}

RegularizerKind parse_regularizer_kind(std::string_view name) {
  for (auto k : {RegularizerKind::GaussianPrior, RegularizerKind::TransferL2,
                 RegularizerKind::AntiCorrelation, RegularizerKind::TreeDistance,
                 RegularizerKind::DirichletSparsity})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown regularizer '" + std::string(name) + "'");
}

Regularizer::Regularizer(RegularizerKind kind, double scalar, Eigen::MatrixXd matrix)
    : kind_(kind), scalar_(scalar), matrix_(std::move(matrix)) {}

Regularizer Regularizer::gaussian_prior(double sigma_m2) {
  if (!(sigma_m2 > 0.0)) throw ConfigError("gaussian prior needs sigma_m2 > 0");
  return {RegularizerKind::GaussianPrior, sigma_m2, {}};
}

Regularizer Regularizer::transfer_l2(Eigen::MatrixXd a_prior) {
  return {RegularizerKind::TransferL2, 0.0, std::move(a_prior)};
}

Regularizer Regularizer::anti_correlation() { return {RegularizerKind::AntiCorrelation, 0.0, {}}; }

Regularizer Regularizer::tree_distance(Eigen::MatrixXd o_star) {
  if (o_star.rows() != o_star.cols()) throw ConfigError("O* must be square");
  if (!o_star.isApprox(o_star.transpose(), 1e-12)) throw ConfigError("O* must be symmetric");
  if (!o_star.diagonal().isOnes(1e-12)) throw ConfigError("O* must have unit diagonal");
  return {RegularizerKind::TreeDistance, 0.0, std::move(o_star)};
}

Regularizer Regularizer::dirichlet_sparsity(double alpha_a, double floor) {
  if (!(alpha_a > 0.0)) throw ConfigError("dirichlet sparsity needs alpha_a > 0");
  if (!(floor > 0.0 && floor < 1.0)) throw ConfigError("dirichlet sparsity needs 0 < floor < 1");
  Regularizer r{RegularizerKind::DirichletSparsity, alpha_a, {}};
  r.floor_ = floor;
  return r;
}

RegValue Regularizer::evaluate(const Eigen::MatrixXd& a) const {
  switch (kind_) {
    case RegularizerKind::GaussianPrior: return gaussian_prior_reg(a, scalar_);
    case RegularizerKind::AntiCorrelation: return anti_correlation_reg(a);
    case RegularizerKind::TreeDistance: return tree_reg(a, matrix_);
    case RegularizerKind::DirichletSparsity: return dirichlet_sparsity_reg(a, scalar_, floor_);
    case RegularizerKind::TransferL2: {
      const Alignment al = align_columns(a, matrix_);
      RegValue aligned = transfer_l2_reg(al.aligned, matrix_);
      RegValue out{aligned.value, Eigen::MatrixXd(a.rows(), a.cols())};
      for (std::size_t j = 0; j < al.permutation.size(); ++j)
        out.grad.col(al.permutation[j]) = aligned.grad.col(static_cast<Eigen::Index>(j));
      return out;
    }
  }
  throw ConfigError("unhandled regularizer kind");
}

}  // namespace tdreg
