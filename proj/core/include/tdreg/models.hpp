#pragma once

#include <cstdint>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "tdreg/types.hpp"

namespace tdreg {

inline constexpr double kProbabilityFloor = 1e-12;

/// Spherical Gaussian mixture: x | h ~ N(a_h, σ² I), h ~ Discrete(weights).
struct GmmModel {
  Eigen::MatrixXd a;
  Eigen::VectorXd weights;
  double sigma2 = 1.0;
};

/// How documents are scored under an LDA model (the exact marginal is
/// intractable). Soft counts enter the multinomial coefficient through lgamma.
enum class LdaSurrogate {
  Multinomial,  // multinomial pmf of the topic average ā = A·1/K
  Linear,       // kernel Σ_d c_d log ā_d only; maximized at a single word
  Mixture,      // equal-weight mixture of per-topic multinomials (α_B → 0 limit)
};

std::string_view to_string(LdaSurrogate s);
LdaSurrogate parse_lda_surrogate(std::string_view name);

/// LDA with a symmetric Dirichlet(α_B) topic prior and fixed document length.
/// An infinite α_B gives every document the uniform topic mixture.
struct LdaModel {
  Eigen::MatrixXd a;
  double alpha_b = 1.0;
  int doc_length = 3;
  LdaSurrogate surrogate = LdaSurrogate::Multinomial;
};

using Model = std::variant<GmmModel, LdaModel>;

void validate(const GmmModel& m);
void validate(const LdaModel& m);

Dataset gmm_sample(const GmmModel& model, int n, std::uint64_t seed);
Dataset lda_sample(const LdaModel& model, int n, std::uint64_t seed);

struct LogLikelihood {
  double value = 0.0;
  Eigen::MatrixXd grad;  // ∂value/∂x, same shape as the data
};

/// Σ_n log Σ_k w_k N(x_n | a_k, σ² I).
LogLikelihood gmm_loglik(const Eigen::MatrixXd& x, const GmmModel& model);

/// Linear: Σ_n Σ_d c_dn log(ā_d + ε).
/// Multinomial: adds log Γ(ℓ_n + 1) − Σ_d log Γ(c_dn + 1), which keeps the
/// maximizing soft counts inside the simplex.
/// Mixture: Σ_n log Σ_k (1/K) Mult(c_n | a_k), same coefficient.
LogLikelihood lda_surrogate_loglik(const Eigen::MatrixXd& docs, const LdaModel& model);

/// Per-observation held-out log-likelihood.
double heldout_eval(const Eigen::MatrixXd& x, const Model& model);

}  // namespace tdreg
