#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdreg/decomposition.hpp"
#include "tdreg/models.hpp"
#include "tdreg/pipeline.hpp"
#include "tdreg/regularizers.hpp"

namespace tdreg {

struct AdamOptions {
  double step_size = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  long t = 0;
};

/// One bias-corrected ADAM descent step on x.
void adam_step(Eigen::MatrixXd& x, const Eigen::MatrixXd& grad, AdamState& state,
               const AdamOptions& opts);

enum class GradientMode { Adjoint, FiniteDifference };

struct RtdmConfig {
  double lambda = 1.0;
  int n_p = 0;
  double epsilon = 1e-6;  // stop once ‖X_P − X_P'‖₂ ≤ epsilon
  int max_iters = 500;
  AdamOptions adam;
  GradientMode gradient_mode = GradientMode::Adjoint;
  // In adjoint mode, fall back to finite differences for iterations whose
  // spectrum is too degenerate for the eigenvector adjoint.
  bool fd_fallback = true;
  double fd_step = 1e-5;
  double eigen_gap_tol = 1e-8;
  std::uint64_t seed = 0;
  TdmOptions tdm;
  // ℓ_P for LDA pseudo-documents; 0 picks the median training length.
  int pseudo_doc_length = 0;
  // Added to sampled pseudo-document counts before they become soft counts.
  double pseudo_count_smoothing = 0.1;
  // Scores LDA pseudo-documents in −log p(X_P | A_T).
  LdaSurrogate lda_surrogate = LdaSurrogate::Multinomial;
  bool cache_training_moments = true;
};

/// Training data, its cached moments and the unregularized fit A_T.
struct TrainingFit {
  TrainingBlock block;
  DecompositionResult a_t;
  Model likelihood;  // p(·|A_T) scoring the pseudo-data
  int pseudo_length = 0;
};

TrainingFit fit_training(const Eigen::MatrixXd& x_t, const ModelConstants& consts,
                         const RtdmConfig& cfg);

struct LossEvaluation {
  double loss = 0.0;
  double data_term = 0.0;  // −log p(X_P | A_T)
  double reg_value = 0.0;  // R(A_{T∪P})
  double reg_term = 0.0;   // signed, λ-weighted contribution of R to the loss
  DecompositionResult combined;
  Eigen::MatrixXd grad;  // ∂L/∂X_P when requested
  bool used_fd_fallback = false;
};

/// The pseudo-data objective L(X_P) = −log p(X_P|A_T) ± λ R(A_{T∪P}).
class PseudoDataLoss {
 public:
  PseudoDataLoss(const TrainingFit& fit, Regularizer reg, const RtdmConfig& cfg);

  LossEvaluation evaluate(const Eigen::MatrixXd& x_p, bool with_gradient) const;
  double value(const Eigen::MatrixXd& x_p) const;
  Eigen::MatrixXd adjoint_gradient(const Eigen::MatrixXd& x_p) const;
  Eigen::MatrixXd finite_difference_gradient(const Eigen::MatrixXd& x_p) const;

  const PipelineOptions& pipeline_options() const { return pipeline_; }

 private:
  LossEvaluation forward(const Eigen::MatrixXd& x_p, PipelineTape* tape,
                         Eigen::MatrixXd* reg_grad) const;

  const TrainingFit& fit_;
  Regularizer reg_;
  RtdmConfig cfg_;
  PipelineOptions pipeline_;
};

double loss(const TrainingFit& fit, const Eigen::MatrixXd& x_p, const Regularizer& reg,
            const RtdmConfig& cfg);
Eigen::MatrixXd loss_gradient(const TrainingFit& fit, const Eigen::MatrixXd& x_p,
                              const Regularizer& reg, const RtdmConfig& cfg);

struct IterationRecord {
  int iter = 0;
  double loss = 0.0;
  double data_term = 0.0;
  double reg_term = 0.0;
  double reg_value = 0.0;
  double delta_xp = 0.0;
  double eval_metric = std::numeric_limits<double>::quiet_NaN();
  bool fd_fallback = false;
};

struct RtdmTrace {
  std::vector<IterationRecord> records;

  /// Columns: iter,loss,data_term,reg_term,delta_xp,eval_metric.
  void write_csv(std::ostream& out) const;
};

/// Called once per iteration with the current combined fit; the value lands
/// in the trace's eval_metric column.
using IterationMetric = std::function<double(const DecompositionResult& combined)>;

enum class StopReason {
  Converged,      // ‖ΔX_P‖ ≤ epsilon
  MaxIterations,
  Infeasible,     // a step made the decomposition undefined (e.g. rank loss)
};

struct RtdmResult {
  DecompositionResult a_t;
  DecompositionResult result;  // A_{T∪P}
  RtdmTrace trace;
  Eigen::MatrixXd x_p;
  bool converged = false;
  int iterations = 0;
  StopReason stop = StopReason::MaxIterations;
  std::string stop_message;
};

RtdmResult rtdm_run(const Eigen::MatrixXd& x_t, const ModelConstants& consts,
                    const Regularizer& reg, const RtdmConfig& cfg,
                    const IterationMetric& metric = {});

/// Same, reusing an existing training fit.
RtdmResult rtdm_run(const TrainingFit& fit, const Regularizer& reg, const RtdmConfig& cfg,
                    const IterationMetric& metric = {});

/// Initial pseudo-data drawn from p(·|A_T). For LDA the returned matrix holds
/// the unconstrained logits whose softmax scaled by ℓ_P gives the soft counts.
Eigen::MatrixXd initial_pseudo_parameters(const TrainingFit& fit, const RtdmConfig& cfg);

/// Maps optimizer parameters to pseudo observations (identity for the GMM).
Eigen::MatrixXd pseudo_observations(const TrainingFit& fit, const Eigen::MatrixXd& params);

}  // namespace tdreg
