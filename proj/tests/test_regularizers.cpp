#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "tdreg/errors.hpp"
#include "tdreg/heading_tree.hpp"
#include "tdreg/regularizers.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace tdreg {
namespace {

using testing::random_matrix;
using testing::random_topics;
using testing::random_tree_distances;

Eigen::MatrixXd central_difference(const std::function<double(const Eigen::MatrixXd&)>& f,
                                   const Eigen::MatrixXd& x, double h = 1e-5) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = f(probe);
      probe(i, j) = orig - h;
      const double down = f(probe);
      probe(i, j) = orig;
      g(i, j) = (up - down) / (2 * h);
    }
  return g;
}

void expect_gradient(const Regularizer& reg, const Eigen::MatrixXd& a, double tol) {
  const RegValue r = reg.evaluate(a);
  const Eigen::MatrixXd fd =
      central_difference([&](const Eigen::MatrixXd& p) { return reg.evaluate(p).value; }, a, 1e-6);
  EXPECT_LT(testing::relative_error(r.grad, fd), tol) << to_string(reg.kind());
}

TEST(GaussianPrior, ZeroMatrix) {
  EXPECT_NEAR(gaussian_prior_reg(Eigen::MatrixXd::Zero(1, 1), 1.0).value,
              -0.5 * std::log(2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(gaussian_prior_reg(Eigen::MatrixXd::Zero(1, 1), 1.0).value, -0.91894, 1e-5);
}

TEST(GaussianPrior, QuadraticTermScales) {
  const Eigen::MatrixXd a = random_matrix(3, 2, 1);
  const double c = gaussian_prior_reg(Eigen::MatrixXd::Zero(3, 2), 2.0).value;
  const double q1 = gaussian_prior_reg(a, 2.0).value - c;
  const double q2 = gaussian_prior_reg(2.0 * a, 2.0).value - c;
  EXPECT_NEAR(q2, 4.0 * q1, 1e-12);
}

TEST(GaussianPrior, GradientMatchesFiniteDifferences) {
  const Eigen::MatrixXd a = random_matrix(4, 3, 2);
  const RegValue r = gaussian_prior_reg(a, 1.5);
  const Eigen::MatrixXd fd = central_difference(
      [](const Eigen::MatrixXd& p) { return gaussian_prior_reg(p, 1.5).value; }, a);
  EXPECT_LT(testing::relative_error(r.grad, fd), 1e-7);
}

TEST(TransferL2, ValuesAndGradient) {
  const Eigen::MatrixXd prior = random_matrix(5, 3, 3);
  const RegValue same = transfer_l2_reg(prior, prior);
  EXPECT_EQ(same.value, 0.0);
  EXPECT_EQ(same.grad.norm(), 0.0);
  Eigen::MatrixXd bumped = prior;
  bumped(0, 0) += 1.0;
  EXPECT_NEAR(transfer_l2_reg(bumped, prior).value, 1.0, 1e-14);
  const Eigen::MatrixXd a = prior + 0.3 * random_matrix(5, 3, 4);
  const Eigen::MatrixXd fd = central_difference(
      [&](const Eigen::MatrixXd& p) { return transfer_l2_reg(p, prior).value; }, a);
  EXPECT_LT(testing::relative_error(transfer_l2_reg(a, prior).grad, fd), 1e-6);
}

TEST(TransferL2, AlignsBeforeMeasuring) {
  const Eigen::MatrixXd prior = random_matrix(4, 3, 5);
  Eigen::MatrixXd a = prior;
  a.col(0).swap(a.col(2));
  const Regularizer reg = Regularizer::transfer_l2(prior);
  EXPECT_NEAR(reg.evaluate(a).value, 0.0, 1e-15);
  a(1, 0) += 0.5;  // column 0 of a matches prior column 2
  const RegValue r = reg.evaluate(a);
  EXPECT_NEAR(r.value, 0.5, 1e-14);
  EXPECT_NEAR(r.grad(1, 0), 1.0, 1e-14);
}

TEST(AntiCorrelation, Values) {
  EXPECT_NEAR(anti_correlation_reg(Eigen::MatrixXd::Identity(4, 3)).value, 0.0, 1e-15);
  Eigen::MatrixXd same(3, 2);
  same.col(0) = Eigen::Vector3d(1, 2, 2) / 3.0;
  same.col(1) = same.col(0);
  EXPECT_NEAR(anti_correlation_reg(same).value, 2.0, 1e-14);
}

TEST(AntiCorrelation, GradientMatchesFiniteDifferences) {
  const Eigen::MatrixXd a = random_matrix(5, 4, 6);
  const Eigen::MatrixXd fd = central_difference(
      [](const Eigen::MatrixXd& p) { return anti_correlation_reg(p).value; }, a);
  EXPECT_LT(testing::relative_error(anti_correlation_reg(a).grad, fd), 1e-6);
}

TEST(TreeReg, OneHotColumnContributesNothing) {
  const TreeDistances td = random_tree_distances(6, 7);
  EXPECT_EQ(tree_reg(Eigen::MatrixXd::Identity(6, 1), td.o_star).value, 0.0);
}

TEST(TreeReg, TwoAdjacentHeadingsHalfMass) {
  std::istringstream in("Adult [M01.060.116]\nAged [M01.060.116.100]\n");
  const TreeDistances td = build_tree_distance(HeadingTree::parse(in));
  // Each unordered pair of headings is counted once.
  EXPECT_NEAR(tree_reg(Eigen::Vector2d(0.5, 0.5), td.o_star).value, -0.25, 1e-15);
}

TEST(TreeReg, MatrixFormEqualsElementwiseSum) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const int d = 8 + static_cast<int>(s);
    const TreeDistances td = random_tree_distances(d, 10 + s);
    const Eigen::MatrixXd a = random_topics(d, 3, 20 + s);
    EXPECT_NEAR(tree_reg(a, td.o_star).value, testing::tree_reg_elementwise(a, td.o), 1e-10);
  }
}

TEST(TreeReg, GradientMatchesFiniteDifferences) {
  const TreeDistances td = random_tree_distances(7, 30);
  const Eigen::MatrixXd a = random_topics(7, 2, 31);
  const Eigen::MatrixXd fd = central_difference(
      [&](const Eigen::MatrixXd& p) { return tree_reg(p, td.o_star).value; }, a);
  EXPECT_LT(testing::relative_error(tree_reg(a, td.o_star).grad, fd), 1e-6);
}

TEST(TreeReg, AntiSparsityClosedForm) {
  // Unit off-diagonal O*: the regularizer reduces to −Σ_{i<j} a_i a_j.
  const int d = 10;
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(d, d);
  for (int dstar = 1; dstar <= d; ++dstar) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
    a.head(dstar).setConstant(1.0 / dstar);
    double direct = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) direct -= a(i) * a(j);
    const double closed = -0.5 * (dstar - 1.0) / dstar;
    EXPECT_NEAR(tree_reg(a, ones).value, closed, 1e-14);
    EXPECT_NEAR(direct, closed, 1e-14);
  }
}

TEST(TreeReg, ShapeMismatchThrows) {
  EXPECT_THROW(tree_reg(Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Identity(4, 4)), ShapeError);
}

TEST(DirichletSparsity, UniformDensityIsConstant) {
  const int d = 6, k = 3;
  const double want = -k * std::lgamma(static_cast<double>(d));
  EXPECT_NEAR(dirichlet_sparsity_reg(random_topics(d, k, 40), 1.0).value, want, 1e-10);
  EXPECT_NEAR(dirichlet_sparsity_reg(random_topics(d, k, 41), 1.0).value, want, 1e-10);
}

TEST(DirichletSparsity, SparseColumnsPreferredBelowOne) {
  const int d = 8;
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(d, 1.0 / d);
  Eigen::VectorXd peaked = Eigen::VectorXd::Constant(d, 0.01 / (d - 1));
  peaked(0) = 0.99;
  EXPECT_LT(dirichlet_sparsity_reg(peaked, 0.1).value, dirichlet_sparsity_reg(uniform, 0.1).value);
}

TEST(DirichletSparsity, GradientMatchesFiniteDifferences) {
  const Eigen::MatrixXd a = random_topics(6, 3, 42);
  const Eigen::MatrixXd fd = central_difference(
      [](const Eigen::MatrixXd& p) { return dirichlet_sparsity_reg(p, 0.1).value; }, a, 1e-7);
  EXPECT_LT(testing::relative_error(dirichlet_sparsity_reg(a, 0.1).grad, fd), 1e-5);
}

TEST(DirichletSparsity, FlooringKeepsBoundaryFinite) {
  const RegValue r = dirichlet_sparsity_reg(Eigen::Vector3d(1.0, 0.0, -0.5), 0.5);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_THROW(dirichlet_sparsity_reg(Eigen::Vector3d(NAN, 0.5, 0.5), 0.5), DomainError);
}

std::vector<Regularizer> all_regularizers(int d, int k) {
  const TreeDistances td = random_tree_distances(d, 50);
  return {Regularizer::gaussian_prior(0.7), Regularizer::transfer_l2(random_topics(d, k, 51)),
          Regularizer::anti_correlation(), Regularizer::tree_distance(td.o_star),
          Regularizer::dirichlet_sparsity(0.3)};
}

TEST(DirichletSparsity, FloorBoundsRewardForZeroEntries) {
  // A zero entry is worth log(floor); entries below the floor get no gradient.
  const Eigen::Vector3d a(0.5, 0.5, 0.0);
  const RegValue tight = dirichlet_sparsity_reg(a, 0.1);
  const RegValue loose = dirichlet_sparsity_reg(a, 0.1, 1e-3);
  EXPECT_LT(tight.value, loose.value);
  EXPECT_EQ(loose.grad(2), 0.0);
  EXPECT_EQ(dirichlet_sparsity_reg(Eigen::Vector3d(0.5, 0.4995, 0.0005), 0.1, 1e-3).grad(2), 0.0);
  EXPECT_EQ(Regularizer::dirichlet_sparsity(0.1, 1e-3).evaluate(a).value, loose.value);
  EXPECT_THROW(Regularizer::dirichlet_sparsity(0.1, 0.0), ConfigError);
  EXPECT_THROW(dirichlet_sparsity_reg(a, 0.1, -1.0), DomainError);
}

TEST(Regularizers, GradientsAtRandomInteriorPoints) {
  const int d = 6, k = 3;
  for (const Regularizer& reg : all_regularizers(d, k))
    for (std::uint64_t s = 0; s < 20; ++s) expect_gradient(reg, random_topics(d, k, 60 + s), 1e-5);
}

TEST(Regularizers, ValueInvariantUnderColumnPermutation) {
  const int d = 6, k = 3;
  const Eigen::MatrixXd a = random_topics(d, k, 90);
  Eigen::MatrixXd p = a;
  p.col(0).swap(p.col(2));
  for (const Regularizer& reg : all_regularizers(d, k))
    EXPECT_NEAR(reg.evaluate(a).value, reg.evaluate(p).value, 1e-12) << to_string(reg.kind());
}

TEST(Regularizers, SignConvention) {
  EXPECT_EQ(Regularizer::gaussian_prior(1.0).loss_sign(), -1.0);
  EXPECT_EQ(Regularizer::anti_correlation().loss_sign(), 1.0);
  EXPECT_EQ(Regularizer::dirichlet_sparsity(0.1).loss_sign(), 1.0);
  EXPECT_EQ(parse_regularizer_kind(to_string(RegularizerKind::TreeDistance)),
            RegularizerKind::TreeDistance);
  EXPECT_THROW(parse_regularizer_kind("nope"), ConfigError);
}

}  // namespace
}  // namespace tdreg
