#pragma once

#include <cstdint>

#include "tdreg/models.hpp"
#include "tdreg/rtdm.hpp"
#include "test_support.hpp"

namespace tdreg::testing {

// Small instances for gradient checks: training data, a regularizer whose
// gradient flows through the whole pipeline, and pseudo-data near A_T.
struct GradientCase {
  TrainingFit fit;
  Regularizer reg;
  RtdmConfig cfg;
  Eigen::MatrixXd x_p;
};

inline GradientCase gmm_gradient_case(std::uint64_t seed) {
  const int d = 4, k = 2;
  GmmModel truth{random_matrix(d, k, seed, 2.0), Eigen::Vector2d(0.4, 0.6), 0.5};
  RtdmConfig cfg;
  cfg.lambda = 20.0;
  cfg.n_p = 3;
  cfg.seed = seed + 7;
  cfg.tdm.power.seed = seed;
  TrainingFit fit = fit_training(gmm_sample(truth, 40, seed + 1).x, ModelConstants::gmm(k), cfg);
  Eigen::MatrixXd x_p = initial_pseudo_parameters(fit, cfg);
  return {std::move(fit), Regularizer::gaussian_prior(1.0), cfg, std::move(x_p)};
}

inline GradientCase lda_gradient_case(std::uint64_t seed) {
  const int d = 8, k = 2;
  LdaModel truth{random_topics(d, k, seed, 0.5), 0.5, 12};
  RtdmConfig cfg;
  cfg.lambda = 50.0;
  cfg.n_p = 3;
  cfg.seed = seed + 7;
  cfg.tdm.power.seed = seed;
  TrainingFit fit =
      fit_training(lda_sample(truth, 60, seed + 1).x, ModelConstants::lda(k, 0.5), cfg);
  const Eigen::MatrixXd x_p = pseudo_observations(fit, initial_pseudo_parameters(fit, cfg));
  return {std::move(fit), Regularizer::anti_correlation(), cfg, x_p};
}

}  // namespace tdreg::testing
