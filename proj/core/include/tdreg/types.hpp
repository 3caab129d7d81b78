#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace tdreg {

enum class ModelKind { Gmm, Lda };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Observations stored column-wise (D×N). GMM columns are real points, LDA
/// columns are nonnegative (possibly soft) word-count vectors. Samplers fill
/// `labels` with the generating component of each column.
struct Dataset {
  Eigen::MatrixXd x;
  std::vector<int> labels;

  Eigen::Index dim() const { return x.rows(); }
  Eigen::Index size() const { return x.cols(); }
};

/// Per-model scalars that link empirical moments to the decomposable forms
///   M2 = Σ β_k a_k a_kᵀ,  M3 = Σ γ_k a_k⊗a_k⊗a_k.
/// For LDA β and γ are shared by all components and follow from α_B; for the
/// GMM both equal the mixture weights, which are only known after fitting.
struct ModelConstants {
  ModelKind model = ModelKind::Gmm;
  int k = 1;
  double alpha_b = 1.0;
  // GMM noise variance; left empty to estimate it from the data.
  std::optional<double> sigma2;

  static ModelConstants gmm(int k, std::optional<double> sigma2 = std::nullopt) {
    ModelConstants c;
    c.model = ModelKind::Gmm;
    c.k = k;
    c.sigma2 = sigma2;
    return c;
  }
  static ModelConstants lda(int k, double alpha_b) {
    ModelConstants c;
    c.model = ModelKind::Lda;
    c.k = k;
    c.alpha_b = alpha_b;
    return c;
  }

  // α0 = K·α_B
  double alpha0() const { return k * alpha_b; }
  // LDA β = α_B / ((α0 + 1) α0)
  double beta() const { return alpha_b / ((alpha0() + 1.0) * alpha0()); }
  // LDA γ = 2α_B / ((α0 + 2)(α0 + 1) α0)
  double gamma() const { return 2.0 * alpha_b / ((alpha0() + 2.0) * (alpha0() + 1.0) * alpha0()); }
};

}  // namespace tdreg
