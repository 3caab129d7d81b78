#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tdreg/moments.hpp"
#include "tdreg/tensor3.hpp"
#include "tdreg/types.hpp"

namespace tdreg {

inline constexpr double kDefaultRankTolerance = 1e-10;

/// W with Wᵀ·M2·W = I_K and the un-whitener B (Bᵀ·W = I_K). `s` holds the
/// retained eigenvalues of M2 in descending order.
struct WhiteningPair {
  Eigen::MatrixXd w;
  Eigen::MatrixXd b;
  Eigen::VectorXd s;
};

/// Whitening plus the full eigendecomposition it was cut from. The complete
/// spectrum is what the eigenvector adjoint needs.
struct SpectralWhitening {
  WhiteningPair pair;
  Eigen::VectorXd values;   // all D eigenvalues, descending
  Eigen::MatrixXd vectors;  // matching unit eigenvectors, sign-normalized
};

WhiteningPair whiten(const Eigen::MatrixXd& m2, int k, double rank_tol = kDefaultRankTolerance);
SpectralWhitening whiten_spectral(const Eigen::MatrixXd& m2, int k,
                                  double rank_tol = kDefaultRankTolerance);

/// Sum over observations of the uncentered whitened triple statistic.
/// GMM: Σ_n (Wᵀx_n)^⊗3. LDA: Σ_n of the distinct-position triple of document
/// n pushed through W, assembled entirely in K dimensions.
Tensor3 whitened_raw_triples(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, ModelKind model,
                             std::span<const double> lengths = {});

/// Turns an averaged raw whitened triple into the whitened centered M3 using
/// the (uncentered) first and second moments of the same data.
Tensor3 center_whitened_third(const Tensor3& raw_avg, const Eigen::VectorXd& m1,
                              const Eigen::MatrixXd& raw2, const Eigen::MatrixXd& w,
                              ModelKind model, double shift);

/// M3(W, W, W) computed from data without materializing M3.
Tensor3 whitened_third_moment(const Eigen::MatrixXd& x, const WhiteningPair& whitening,
                              const ModelConstants& consts, std::span<const double> lengths = {});

/// M3(W, W, W) by explicit contraction; `ms` must carry m3.
Tensor3 whitened_third_moment(const MomentSet& ms, const WhiteningPair& whitening);

struct Eigenpair {
  double lambda = 0.0;
  Eigen::VectorXd v;
};
using EigenpairList = std::vector<Eigenpair>;

struct PowerMethodOptions {
  int restarts = 15;
  int iters = 60;
  int polish = 20;
  std::uint64_t seed = 0;
};

/// Everything needed to replay the winning power iterations backwards.
struct PowerMethodTrace {
  struct Component {
    Tensor3 tensor;                         // deflated tensor the component came from
    std::vector<Eigen::VectorXd> iterates;  // v_0 (start) .. v_T (before sign fix)
    double sign = 1.0;
    int winner = 0;
  };
  std::vector<Component> components;  // extraction order
  std::vector<int> order;             // order[j] = extraction index of output j
};

EigenpairList tensor_power_method(const Tensor3& t, int k, const PowerMethodOptions& opts,
                                  PowerMethodTrace* trace = nullptr);

struct DecompositionResult {
  Eigen::MatrixXd a;  // reported parameters (LDA columns on the simplex)
  Eigen::MatrixXd a_raw;  // before any feasibility projection
  Eigen::VectorXd weights;
  EigenpairList eigenpairs;
  WhiteningPair whitening;
};

/// Column scale κ with a_k = κ λ_k B v_k: 1 for the GMM, β/γ for LDA.
double reconstruction_scale(const ModelConstants& consts);

DecompositionResult reconstruct_parameters(const EigenpairList& pairs,
                                           const WhiteningPair& whitening,
                                           const ModelConstants& consts,
                                           double rank_tol = kDefaultRankTolerance);

struct TdmOptions {
  PowerMethodOptions power;
  double rank_tol = kDefaultRankTolerance;
};

/// Full pipeline from data. GMM σ² is taken from `consts` or estimated.
DecompositionResult tdm(const Eigen::MatrixXd& x, const ModelConstants& consts,
                        const TdmOptions& opts = {}, std::span<const double> lengths = {});
/// Full pipeline from precomputed moments carrying an explicit m3.
DecompositionResult tdm(const MomentSet& ms, const ModelConstants& consts,
                        const TdmOptions& opts = {});

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Pulls ∂f/∂(projected) back to ∂f/∂(raw) through column-wise simplex
/// projection. On each column's support S the Jacobian is I − 11ᵀ/|S|;
/// entries outside S get zero.
Eigen::MatrixXd simplex_projection_vjp(const Eigen::MatrixXd& projected,
                                       const Eigen::MatrixXd& bar);

struct Alignment {
  std::vector<int> permutation;  // aligned column j = sign_j · a.col(permutation[j])
  std::vector<double> signs;
  Eigen::MatrixXd aligned;
  double distance = 0.0;  // Σ_j ‖aligned_j − ref_j‖₂
};

Alignment align_columns(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref,
                        bool allow_sign_flip = false);

/// Min-cost perfect matching on a square cost matrix; returns row→column.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// ‖aligned(a) − ref‖_F / ‖ref‖_F.
double aligned_relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref,
                              bool allow_sign_flip = false);
/// ‖aligned(a) − ref‖_F.
double aligned_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref,
                        bool allow_sign_flip = false);

}  // namespace tdreg
