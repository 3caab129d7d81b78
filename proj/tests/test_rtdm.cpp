#include <gtest/gtest.h>

#include <sstream>

#include "rtdm_cases.hpp"
#include "tdreg/errors.hpp"
#include "tdreg/rtdm.hpp"

namespace tdreg {
namespace {

using testing::GradientCase;
using testing::gmm_gradient_case;
using testing::lda_gradient_case;
using testing::random_matrix;

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Eigen::MatrixXd x = random_matrix(3, 2, 1);
  const Eigen::MatrixXd before = x;
  AdamState st;
  adam_step(x, Eigen::MatrixXd::Zero(3, 2), st, {});
  EXPECT_TRUE(x == before);
}

TEST(Adam, ConstantGradientStepApproachesStepSize) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 1);
  AdamState st;
  AdamOptions opts;
  opts.step_size = 0.05;
  double last = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const double prev = x(0, 0);
    adam_step(x, Eigen::MatrixXd::Constant(1, 1, 3.7), st, opts);
    last = prev - x(0, 0);
  }
  EXPECT_NEAR(last, opts.step_size, 1e-6);
}

TEST(Adam, FirstStepOpposesGradient) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd g(2, 2);
  g << 1, -2, 0.5, -0.1;
  AdamState st;
  adam_step(x, g, st, {});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(std::signbit(x.data()[i]), g.data()[i] > 0);
}

TEST(Loss, ZeroLambdaIsDataTerm) {
  GradientCase c = gmm_gradient_case(3);
  c.cfg.lambda = 0.0;
  const PseudoDataLoss obj(c.fit, c.reg, c.cfg);
  const LossEvaluation ev = obj.evaluate(c.x_p, true);
  const LogLikelihood ll = gmm_loglik(c.x_p, std::get<GmmModel>(c.fit.likelihood));
  EXPECT_EQ(ev.loss, -ll.value);
  EXPECT_LT((ev.grad + ll.grad).norm(), 1e-10 * std::max(1.0, ll.grad.norm()));
}

TEST(Loss, LinearInLambda) {
  GradientCase c = gmm_gradient_case(4);
  const LossEvaluation e1 = PseudoDataLoss(c.fit, c.reg, c.cfg).evaluate(c.x_p, false);
  c.cfg.lambda *= 2.0;
  const LossEvaluation e2 = PseudoDataLoss(c.fit, c.reg, c.cfg).evaluate(c.x_p, false);
  EXPECT_EQ(e1.data_term, e2.data_term);
  EXPECT_NEAR(e2.reg_term, 2.0 * e1.reg_term, 1e-12 * std::abs(e1.reg_term));
  EXPECT_NEAR(e1.loss, e1.data_term + e1.reg_term, 1e-12 * std::abs(e1.loss));
}

TEST(Loss, LogPriorEntersWithNegativeSign) {
  GradientCase c = gmm_gradient_case(5);
  const LossEvaluation ev = PseudoDataLoss(c.fit, c.reg, c.cfg).evaluate(c.x_p, false);
  EXPECT_NEAR(ev.reg_term, -c.cfg.lambda * ev.reg_value, 1e-12 * std::abs(ev.reg_term));
}

TEST(Loss, FreshPseudoDataMatchesExpectedNegativeLogLikelihood) {
  GradientCase c = gmm_gradient_case(6);
  c.cfg.n_p = 2000;
  const Eigen::MatrixXd x_p = initial_pseudo_parameters(c.fit, c.cfg);
  const LossEvaluation ev = PseudoDataLoss(c.fit, c.reg, c.cfg).evaluate(x_p, false);
  // Monte-Carlo entropy from an independent large sample of the same model.
  const auto& model = std::get<GmmModel>(c.fit.likelihood);
  const Eigen::MatrixXd ref = gmm_sample(model, 200000, 99).x;
  Eigen::VectorXd per_point(ref.cols());
  for (Eigen::Index n = 0; n < ref.cols(); ++n) per_point(n) = -gmm_loglik(ref.col(n), model).value;
  const double mean = per_point.mean();
  const double sd = std::sqrt((per_point.array() - mean).square().mean());
  EXPECT_NEAR(ev.data_term / 2000.0, mean, 4.0 * sd / std::sqrt(2000.0));
}

void expect_adjoint_matches_fd(const GradientCase& c) {
  const PseudoDataLoss obj(c.fit, c.reg, c.cfg);
  const Eigen::MatrixXd adj = obj.adjoint_gradient(c.x_p);
  const Eigen::MatrixXd fd = obj.finite_difference_gradient(c.x_p);
  EXPECT_LT(testing::relative_error(adj, fd), 1e-4) << "adjoint\n" << adj << "\nfd\n" << fd;
}

TEST(LossGradient, GmmAdjointMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 20; ++s) expect_adjoint_matches_fd(gmm_gradient_case(1000 + s));
}

TEST(LossGradient, LdaAdjointMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 20; ++s) expect_adjoint_matches_fd(lda_gradient_case(2000 + s));
}

TEST(LossGradient, RegularizerPartIsNotNegligible) {
  GradientCase c = gmm_gradient_case(7);
  const Eigen::MatrixXd full = PseudoDataLoss(c.fit, c.reg, c.cfg).adjoint_gradient(c.x_p);
  c.cfg.lambda = 0.0;
  const Eigen::MatrixXd data_only = PseudoDataLoss(c.fit, c.reg, c.cfg).adjoint_gradient(c.x_p);
  EXPECT_GT((full - data_only).norm(), 0.05 * data_only.norm());
}

TEST(LossGradient, FallsBackToFiniteDifferencesOnDegenerateGap) {
  GradientCase c = gmm_gradient_case(8);
  c.cfg.eigen_gap_tol = 10.0;  // every gap counts as degenerate
  const PseudoDataLoss obj(c.fit, c.reg, c.cfg);
  const LossEvaluation ev = obj.evaluate(c.x_p, true);
  EXPECT_TRUE(ev.used_fd_fallback);
  EXPECT_TRUE(ev.grad == obj.finite_difference_gradient(c.x_p));
  c.cfg.fd_fallback = false;
  EXPECT_THROW(PseudoDataLoss(c.fit, c.reg, c.cfg).evaluate(c.x_p, true), DegenerateSpectrumError);
}

TEST(LossGradient, FiniteDifferenceModeAgrees) {
  GradientCase c = lda_gradient_case(9);
  const Eigen::MatrixXd adj = PseudoDataLoss(c.fit, c.reg, c.cfg).evaluate(c.x_p, true).grad;
  c.cfg.gradient_mode = GradientMode::FiniteDifference;
  const Eigen::MatrixXd fd = PseudoDataLoss(c.fit, c.reg, c.cfg).evaluate(c.x_p, true).grad;
  EXPECT_LT(testing::relative_error(adj, fd), 1e-4);
}

struct RunCase {
  Eigen::MatrixXd x_t;
  ModelConstants consts;
  Regularizer reg;
  RtdmConfig cfg;
};

RunCase gmm_run_case() {
  GmmModel truth{random_matrix(5, 3, 11, 3.0), Eigen::Vector3d(0.3, 0.3, 0.4), 1.0};
  RtdmConfig cfg;
  cfg.lambda = 1.0;
  cfg.n_p = 10;
  cfg.max_iters = 40;
  cfg.seed = 12;
  cfg.adam.step_size = 0.05;
  return {gmm_sample(truth, 300, 13).x, ModelConstants::gmm(3), Regularizer::gaussian_prior(1.0), cfg};
}

TEST(RtdmRun, NoPseudoDataReturnsTrainingFit) {
  RunCase c = gmm_run_case();
  c.cfg.n_p = 0;
  const RtdmResult r = rtdm_run(c.x_t, c.consts, c.reg, c.cfg);
  const DecompositionResult plain = tdm(c.x_t, c.consts, c.cfg.tdm);
  EXPECT_TRUE(r.result.a == plain.a);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.trace.records.empty());
}

TEST(RtdmRun, ZeroLambdaStaysNearTrainingFit) {
  RunCase c = gmm_run_case();
  c.cfg.lambda = 0.0;
  const RtdmResult r = rtdm_run(c.x_t, c.consts, c.reg, c.cfg);
  // Pseudo-points carry weight N_P/(N_T+N_P) ≈ 3%.
  EXPECT_LT(aligned_relative_error(r.result.a, r.a_t.a), 0.1);
}

TEST(RtdmRun, TraceIsBitReproducible) {
  const RunCase c = gmm_run_case();
  const RtdmResult r1 = rtdm_run(c.x_t, c.consts, c.reg, c.cfg);
  const RtdmResult r2 = rtdm_run(c.x_t, c.consts, c.reg, c.cfg);
  std::ostringstream a, b;
  r1.trace.write_csv(a);
  r2.trace.write_csv(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_TRUE(r1.result.a == r2.result.a);
}

TEST(RtdmRun, CachedMomentsMatchFullRecomputation) {
  RunCase c = gmm_run_case();
  c.cfg.max_iters = 10;
  const RtdmResult cached = rtdm_run(c.x_t, c.consts, c.reg, c.cfg);
  c.cfg.cache_training_moments = false;
  const RtdmResult full = rtdm_run(c.x_t, c.consts, c.reg, c.cfg);
  ASSERT_EQ(cached.trace.records.size(), full.trace.records.size());
  for (std::size_t i = 0; i < cached.trace.records.size(); ++i)
    EXPECT_NEAR(cached.trace.records[i].loss, full.trace.records[i].loss,
                1e-10 * std::max(1.0, std::abs(full.trace.records[i].loss)));
}

TEST(RtdmRun, LossMostlyDecreases) {
  RunCase c = gmm_run_case();
  c.cfg.max_iters = 100;
  const RtdmResult r = rtdm_run(c.x_t, c.consts, c.reg, c.cfg);
  int increases = 0;
  for (std::size_t i = 1; i < r.trace.records.size(); ++i)
    if (r.trace.records[i].loss > r.trace.records[i - 1].loss) ++increases;
  EXPECT_LE(increases, static_cast<int>(0.05 * r.trace.records.size()));
  EXPECT_LT(r.trace.records.back().loss, r.trace.records.front().loss);
}

TEST(RtdmRun, TraceComponentsAndCsv) {
  RunCase c = gmm_run_case();
  c.cfg.max_iters = 3;
  int calls = 0;
  const RtdmResult r = rtdm_run(c.x_t, c.consts, c.reg, c.cfg,
                                [&](const DecompositionResult&) { return ++calls; });
  ASSERT_EQ(r.trace.records.size(), 3u);
  EXPECT_FALSE(r.converged);
  for (const auto& rec : r.trace.records)
    EXPECT_NEAR(rec.loss, rec.data_term + rec.reg_term, 1e-12 * std::abs(rec.loss));
  std::ostringstream out;
  r.trace.write_csv(out);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "iter,loss,data_term,reg_term,delta_xp,eval_metric");
  std::getline(in, row);
  EXPECT_EQ(row.substr(0, 2), "0,");
  EXPECT_EQ(row.substr(row.rfind(',') + 1), "1");
}

TEST(RtdmRun, ConvergesOnTinyUpdates) {
  RunCase c = gmm_run_case();
  c.cfg.adam.step_size = 1e-9;
  c.cfg.epsilon = 1e-6;
  const RtdmResult r = rtdm_run(c.x_t, c.consts, c.reg, c.cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(RtdmRun, LdaRunKeepsSoftCountsValid) {
  LdaModel truth{testing::random_topics(12, 3, 20, 0.3), 0.5, 15};
  RtdmConfig cfg;
  cfg.lambda = 5.0;
  cfg.n_p = 5;
  cfg.max_iters = 20;
  cfg.adam.step_size = 0.05;
  const RtdmResult r = rtdm_run(lda_sample(truth, 400, 21).x, ModelConstants::lda(3, 0.5),
                                Regularizer::anti_correlation(), cfg);
  EXPECT_GE(r.x_p.minCoeff(), 0.0);
  for (Eigen::Index n = 0; n < r.x_p.cols(); ++n) EXPECT_NEAR(r.x_p.col(n).sum(), 15.0, 1e-9);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(r.result.a.col(k).sum(), 1.0, 1e-12);
}

TEST(RtdmRun, InvalidConfigThrows) {
  RunCase c = gmm_run_case();
  c.cfg.epsilon = 0.0;
  EXPECT_THROW(rtdm_run(c.x_t, c.consts, c.reg, c.cfg), ConfigError);
  c = gmm_run_case();
  c.cfg.max_iters = 0;
  EXPECT_THROW(rtdm_run(c.x_t, c.consts, c.reg, c.cfg), ConfigError);
}

}  // namespace
}  // namespace tdreg
