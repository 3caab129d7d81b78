#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tdreg/decomposition.hpp"
#include "tdreg/errors.hpp"
#include "tdreg/moments.hpp"
#include "tdreg/tensor3.hpp"
#include "tdreg/types.hpp"

namespace tdreg {

/// Raised when the eigenvector adjoint would divide by a vanishing eigen-gap.
class DegenerateSpectrumError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Training-side inputs of the combined decomposition. Training moments are
/// computed once; the training data is kept for the whitened third moment,
/// which depends on the current whitening matrix.
struct TrainingBlock {
  ModelConstants consts;       // GMM σ² always resolved
  Eigen::MatrixXd x;
  std::vector<double> lengths;  // LDA document lengths (empty for GMM)
  MomentSet moments;           // m1 / raw2 / m2 of the training data
};

TrainingBlock make_training_block(const Eigen::MatrixXd& x, const ModelConstants& consts);

/// Forward record of TDM on training + pseudo data; the backward pass replays it.
struct PipelineTape {
  long n_t = 0;
  long n_p = 0;
  Eigen::VectorXd m1;
  Eigen::MatrixXd raw2;
  Eigen::MatrixXd m2;
  SpectralWhitening spectral;
  Tensor3 tensor;  // whitened centered third moment
  PowerMethodTrace power;
  DecompositionResult result;
};

struct PipelineOptions {
  TdmOptions tdm;
  double pseudo_length = 0.0;  // ℓ_P, LDA only
  // Recompute moments on the concatenated data instead of reusing the
  // cached training moments. Reference path for tests.
  bool recompute_training = false;
  double eigen_gap_tol = 1e-8;
};

/// TDM on the union of the training block and pseudo data `x_p`.
PipelineTape combined_forward(const TrainingBlock& train, const Eigen::MatrixXd& x_p,
                              const PipelineOptions& opts);

/// ∂⟨Ā, A_raw⟩/∂x_p for the unprojected reconstructed parameters.
Eigen::MatrixXd combined_backward(const TrainingBlock& train, const Eigen::MatrixXd& x_p,
                                  const PipelineTape& tape, const Eigen::MatrixXd& a_bar,
                                  const PipelineOptions& opts);

// Stage adjoints, exposed for testing.

/// Eigen-whitening adjoint: (W̄, B̄) → M̄2 (symmetric).
Eigen::MatrixXd whitening_vjp(const SpectralWhitening& sw, const Eigen::MatrixXd& w_bar,
                              const Eigen::MatrixXd& b_bar, double gap_tol);

/// Power-method adjoint: (λ̄, V̄) in output order → T̄ (symmetric).
Tensor3 power_method_vjp(const PowerMethodTrace& trace, const EigenpairList& pairs,
                         const Eigen::VectorXd& lambda_bar, const Eigen::MatrixXd& v_bar);

/// Adjoint of `scale · whitened_raw_triples(x, w)`: accumulates into w_bar and,
/// when given, x_bar.
void whitened_raw_triples_vjp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                              ModelKind model, std::span<const double> lengths,
                              const Tensor3& t_bar, double scale, Eigen::MatrixXd& w_bar,
                              Eigen::MatrixXd* x_bar);

}  // namespace tdreg
