#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "tdreg/models.hpp"

namespace tdreg {

/// Regularizer value and its gradient with respect to the parameter matrix.
struct RegValue {
  double value = 0.0;
  Eigen::MatrixXd grad;
};

/// log N(A | 0, σ_m² I), summed over all entries.
RegValue gaussian_prior_reg(const Eigen::MatrixXd& a, double sigma_m2);

/// ‖A − A_prior‖_F. Columns are assumed already aligned.
RegValue transfer_l2_reg(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_prior);

/// Σ_{i≠j} a_i·a_j over ordered column pairs.
RegValue anti_correlation_reg(const Eigen::MatrixXd& a);

/// −½ tr(AᵀO*A − AᵀA) = −Σ_k Σ_{i<j} a_ik a_jk / O_ij.
RegValue tree_reg(const Eigen::MatrixXd& a, const Eigen::MatrixXd& o_star);

/// −Σ_k log Dirichlet(ã_k | α_A 1), where ã_k is column k floored at `floor`
/// and renormalized. Entries at or below the floor count as absent and get no
/// gradient, which bounds the reward for zeroing an entry.
RegValue dirichlet_sparsity_reg(const Eigen::MatrixXd& a, double alpha_a,
                                double floor = kProbabilityFloor);

enum class RegularizerKind { GaussianPrior, TransferL2, AntiCorrelation, TreeDistance, DirichletSparsity };

std::string_view to_string(RegularizerKind kind);
RegularizerKind parse_regularizer_kind(std::string_view name);

/// A configured regularizer. Log-prior kinds are maximized, penalties are
/// minimized; `loss_sign()` is the factor they enter the pseudo-data loss with.
class Regularizer {
 public:
  static Regularizer gaussian_prior(double sigma_m2);
  static Regularizer transfer_l2(Eigen::MatrixXd a_prior);
  static Regularizer anti_correlation();
  static Regularizer tree_distance(Eigen::MatrixXd o_star);
  static Regularizer dirichlet_sparsity(double alpha_a, double floor = kProbabilityFloor);

  RegularizerKind kind() const { return kind_; }
  bool is_log_prior() const { return kind_ == RegularizerKind::GaussianPrior; }
  double loss_sign() const { return is_log_prior() ? -1.0 : 1.0; }

  /// Value and gradient at A. TransferL2 first aligns A's columns to the prior
  /// and maps the gradient back to A's column order.
  RegValue evaluate(const Eigen::MatrixXd& a) const;

  const Eigen::MatrixXd& a_prior() const { return matrix_; }
  const Eigen::MatrixXd& o_star() const { return matrix_; }
  double sigma_m2() const { return scalar_; }
  double alpha_a() const { return scalar_; }
  double floor() const { return floor_; }

 private:
  Regularizer(RegularizerKind kind, double scalar, Eigen::MatrixXd matrix);

  RegularizerKind kind_;
  double scalar_ = 0.0;
  Eigen::MatrixXd matrix_;
  double floor_ = kProbabilityFloor;
};

}  // namespace tdreg
