#include <gtest/gtest.h>

#include "tdreg/models.hpp"
#include "tdreg/pipeline.hpp"
#include "test_support.hpp"

namespace tdreg {
namespace {

using testing::random_matrix;
using testing::random_topics;

Tensor3 random_symmetric(int k, std::uint64_t seed) {
  const Eigen::MatrixXd r = random_matrix(k * k, k, seed);
  Tensor3 t(k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      for (int c = 0; c < k; ++c) t(a, b, c) = r(a * k + b, c);
  return t.symmetrized();
}

double inner(const Tensor3& a, const Tensor3& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.dim(); ++i) s += a.slice(i).cwiseProduct(b.slice(i)).sum();
  return s;
}

TEST(WhiteningAdjoint, MatchesDirectionalDifference) {
  const int d = 6, k = 3;
  const Eigen::MatrixXd f = random_matrix(d, k, 1);
  Eigen::MatrixXd m2 = f * f.transpose() + 0.05 * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd w_bar = random_matrix(d, k, 2);
  const Eigen::MatrixXd b_bar = random_matrix(d, k, 3);
  Eigen::MatrixXd dir = random_matrix(d, d, 4);
  dir = (0.5 * (dir + dir.transpose())).eval();

  auto objective = [&](const Eigen::MatrixXd& m) {
    const WhiteningPair p = whiten(m, k);
    return p.w.cwiseProduct(w_bar).sum() + p.b.cwiseProduct(b_bar).sum();
  };
  const SpectralWhitening sw = whiten_spectral(m2, k);
  const Eigen::MatrixXd m_bar = whitening_vjp(sw, w_bar, b_bar, 1e-8);
  const double h = 1e-6;
  const double fd = (objective(m2 + h * dir) - objective(m2 - h * dir)) / (2 * h);
  EXPECT_NEAR(m_bar.cwiseProduct(dir).sum(), fd, 1e-6 * std::max(1.0, std::abs(fd)));
}

TEST(WhiteningAdjoint, DegenerateGapThrows) {
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Identity(4, 4);
  const SpectralWhitening sw = whiten_spectral(m2, 2);
  EXPECT_THROW(whitening_vjp(sw, Eigen::MatrixXd::Ones(4, 2), Eigen::MatrixXd::Zero(4, 2), 1e-8),
               DegenerateSpectrumError);
}

TEST(PowerMethodAdjoint, MatchesDirectionalDifference) {
  const int k = 3;
  // Perturbed orthogonal tensor so iterations have not fully converged.
  Tensor3 t(k);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(k, k, 9))
                                .householderQ();
  const double lam[] = {4.0, 2.5, 1.0};
  for (int j = 0; j < k; ++j) t.add_cube(lam[j], q.col(j));
  t += 0.05 * random_symmetric(k, 10);
  const Tensor3 dir = random_symmetric(k, 11);
  const Eigen::VectorXd lb = random_matrix(k, 1, 12);
  const Eigen::MatrixXd vb = random_matrix(k, k, 13);

  PowerMethodOptions opts;
  opts.iters = 8;
  opts.polish = 4;
  auto objective = [&](const Tensor3& tt) {
    const EigenpairList pairs = tensor_power_method(tt, k, opts);
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += lb(j) * pairs[j].lambda + vb.col(j).dot(pairs[j].v);
    return s;
  };
  PowerMethodTrace trace;
  const EigenpairList pairs = tensor_power_method(t, k, opts, &trace);
  const Tensor3 t_bar = power_method_vjp(trace, pairs, lb, vb);
  const double h = 1e-6;
  const double fd = (objective(t + h * dir) - objective(t - h * dir)) / (2 * h);
  EXPECT_NEAR(inner(t_bar, dir), fd, 1e-6 * std::max(1.0, std::abs(fd)));
}

void check_raw_triples(ModelKind model, const Eigen::MatrixXd& x, std::vector<double> lengths) {
  const Eigen::Index d = x.rows();
  const int k = 3;
  const Eigen::MatrixXd w = random_matrix(d, k, 21);
  const Tensor3 t_bar = random_symmetric(k, 22);
  const Eigen::MatrixXd dx = random_matrix(d, x.cols(), 23);
  const Eigen::MatrixXd dw = random_matrix(d, k, 24);
  auto objective = [&](const Eigen::MatrixXd& xx, const Eigen::MatrixXd& ww) {
    return inner(whitened_raw_triples(xx, ww, model, lengths), t_bar);
  };
  Eigen::MatrixXd w_bar = Eigen::MatrixXd::Zero(d, k);
  Eigen::MatrixXd x_bar = Eigen::MatrixXd::Zero(d, x.cols());
  whitened_raw_triples_vjp(x, w, model, lengths, t_bar, 1.0, w_bar, &x_bar);
  const double h = 1e-6;
  const double fd_x = (objective(x + h * dx, w) - objective(x - h * dx, w)) / (2 * h);
  const double fd_w = (objective(x, w + h * dw) - objective(x, w - h * dw)) / (2 * h);
  EXPECT_NEAR(x_bar.cwiseProduct(dx).sum(), fd_x, 1e-6 * std::max(1.0, std::abs(fd_x)));
  EXPECT_NEAR(w_bar.cwiseProduct(dw).sum(), fd_w, 1e-6 * std::max(1.0, std::abs(fd_w)));
}

TEST(RawTriplesAdjoint, Gmm) { check_raw_triples(ModelKind::Gmm, random_matrix(5, 7, 30), {}); }

TEST(RawTriplesAdjoint, Lda) {
  const Eigen::MatrixXd x = random_topics(6, 4, 31) * 10.0;
  check_raw_triples(ModelKind::Lda, x, std::vector<double>(4, 10.0));
}

struct PipelineCase {
  TrainingBlock block;
  Eigen::MatrixXd x_p;
  PipelineOptions opts;
};

PipelineCase gmm_case(std::uint64_t seed) {
  const int d = 4, k = 2;
  GmmModel truth{random_matrix(d, k, seed, 2.0), Eigen::VectorXd::Constant(k, 0.5), 0.5};
  PipelineCase c;
  c.block = make_training_block(gmm_sample(truth, 40, seed + 1).x, ModelConstants::gmm(k));
  c.x_p = gmm_sample(truth, 3, seed + 2).x;
  c.opts.tdm.power.seed = seed;
  return c;
}

PipelineCase lda_case(std::uint64_t seed) {
  const int d = 8, k = 2;
  LdaModel truth{random_topics(d, k, seed, 0.5), 0.5, 12};
  PipelineCase c;
  c.block = make_training_block(lda_sample(truth, 60, seed + 1).x, ModelConstants::lda(k, 0.5));
  c.x_p = (lda_sample(truth, 3, seed + 2).x.array() + 0.3).matrix();
  c.x_p = c.x_p * (12.0 / c.x_p.col(0).sum());
  c.opts.pseudo_length = 12.0;
  c.opts.tdm.power.seed = seed;
  return c;
}

void check_combined_backward(const PipelineCase& c) {
  const PipelineTape tape = combined_forward(c.block, c.x_p, c.opts);
  const Eigen::MatrixXd a_bar = random_matrix(tape.result.a_raw.rows(), tape.result.a_raw.cols(), 77);
  const Eigen::MatrixXd grad = combined_backward(c.block, c.x_p, tape, a_bar, c.opts);
  Eigen::MatrixXd fd(grad.rows(), grad.cols());
  const double h = 1e-5;
  for (Eigen::Index j = 0; j < fd.cols(); ++j)
    for (Eigen::Index i = 0; i < fd.rows(); ++i) {
      Eigen::MatrixXd up = c.x_p, down = c.x_p;
      up(i, j) += h;
      down(i, j) -= h;
      const double fu = combined_forward(c.block, up, c.opts).result.a_raw.cwiseProduct(a_bar).sum();
      const double fdn =
          combined_forward(c.block, down, c.opts).result.a_raw.cwiseProduct(a_bar).sum();
      fd(i, j) = (fu - fdn) / (2 * h);
    }
  EXPECT_LT(testing::relative_error(grad, fd), 1e-5) << "adjoint\n" << grad << "\nfd\n" << fd;
}

TEST(CombinedBackward, GmmMatchesFiniteDifferences) {
  for (std::uint64_t s = 1; s <= 5; ++s) check_combined_backward(gmm_case(100 * s));
}

TEST(CombinedBackward, LdaMatchesFiniteDifferences) {
  for (std::uint64_t s = 1; s <= 5; ++s) check_combined_backward(lda_case(100 * s));
}

TEST(CombinedBackward, CachedAndRecomputedPathsAgree) {
  PipelineCase c = gmm_case(3);
  const PipelineTape cached = combined_forward(c.block, c.x_p, c.opts);
  c.opts.recompute_training = true;
  const PipelineTape full = combined_forward(c.block, c.x_p, c.opts);
  EXPECT_LT((cached.result.a_raw - full.result.a_raw).norm(), 1e-10);
}

}  // namespace
}  // namespace tdreg
