#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "tdreg/tensor3.hpp"
#include "tdreg/types.hpp"

namespace tdreg {

// Explicit D×D×D tensors are only built up to this dimension.
inline constexpr Eigen::Index kMaxExplicitThirdDim = 512;

enum class ThirdMoment { Skip, Materialize };

/// Empirical moment estimates.
///
/// `raw2`/`raw3` hold the plain averages the estimator is built from
/// (E[x⊗x] for the GMM, E[e_w1⊗e_w2] over distinct word positions for LDA).
/// `m2`/`m3` are the centered estimates whose expectations take the
/// decomposable form. Raw averages combine linearly across datasets, the
/// centered ones (for LDA) do not, so combination goes through the raw parts.
struct MomentSet {
  ModelKind model = ModelKind::Gmm;
  Eigen::VectorXd m1;
  Eigen::MatrixXd m2;
  std::optional<Tensor3> m3;
  Eigen::MatrixXd raw2;
  std::optional<Tensor3> raw3;
  long n = 0;
  // σ² for the GMM, α0 = K·α_B for LDA.
  double shift = 0.0;

  Eigen::Index dim() const { return m1.size(); }
  bool has_third() const { return m3.has_value(); }
};

/// Smallest eigenvalue of the sample covariance, clamped at zero.
double gmm_estimate_sigma2(const Eigen::MatrixXd& x);

MomentSet gmm_moments(const Eigen::MatrixXd& x, double sigma2,
                      ThirdMoment third = ThirdMoment::Skip);

/// Per-document contributions for counts `c` and length `ell`, averaged over
/// ordered tuples of distinct word positions.
struct DocStatistics {
  Eigen::VectorXd first;
  Eigen::MatrixXd pairs;
  std::optional<Tensor3> triples;
};

DocStatistics lda_doc_statistics(const Eigen::VectorXd& c, double ell,
                                 ThirdMoment third = ThirdMoment::Materialize);

/// Document lengths default to column sums; pseudo-documents pass their fixed
/// length explicitly.
MomentSet lda_moments(const Eigen::MatrixXd& docs, const ModelConstants& consts,
                      ThirdMoment third = ThirdMoment::Skip,
                      std::span<const double> lengths = {});

/// Observation-count weighted average of two moment sets.
MomentSet combine_moments(const MomentSet& mt, const MomentSet& mp);

/// Recomputes m2/m3 from m1, raw2, raw3 and shift.
void recenter(MomentSet& ms);

std::vector<double> column_lengths(const Eigen::MatrixXd& docs);

}  // namespace tdreg
