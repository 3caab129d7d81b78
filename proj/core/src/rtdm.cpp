#include "tdreg/rtdm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tdreg/errors.hpp"

namespace tdreg {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int median_length(const std::vector<double>& lengths) {
  std::vector<double> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double med = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return static_cast<int>(std::lround(med));
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p(z.rows(), z.cols());
  for (Eigen::Index n = 0; n < z.cols(); ++n) {
    const Eigen::ArrayXd e = (z.col(n).array() - z.col(n).maxCoeff()).exp();
    p.col(n) = (e / e.sum()).matrix();
  }
  return p;
}

}  // namespace

void adam_step(Eigen::MatrixXd& x, const Eigen::MatrixXd& grad, AdamState& state,
               const AdamOptions& opts) {
  if (grad.rows() != x.rows() || grad.cols() != x.cols())
    throw ShapeError("adam_step: gradient shape does not match parameters");
  if (state.t == 0) {
    state.m = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    state.v = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  } else if (state.m.rows() != x.rows() || state.m.cols() != x.cols()) {
    throw ShapeError("adam_step: state shape does not match parameters");
  }
  ++state.t;
  state.m = opts.beta1 * state.m + (1.0 - opts.beta1) * grad;
  state.v = opts.beta2 * state.v + (1.0 - opts.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.t));
  x.array() -= opts.step_size * (state.m.array() / c1) /
               ((state.v.array() / c2).sqrt() + opts.epsilon);
}

TrainingFit fit_training(const Eigen::MatrixXd& x_t, const ModelConstants& consts,
                         const RtdmConfig& cfg) {
  if (x_t.cols() < consts.k)
    throw DegenerateDataError("rtdm: need at least K training observations");
  TrainingFit fit;
  fit.block = make_training_block(x_t, consts);
  fit.a_t = tdm(x_t, fit.block.consts, cfg.tdm, fit.block.lengths);
  if (consts.model == ModelKind::Gmm) {
    fit.likelihood = GmmModel{fit.a_t.a, fit.a_t.weights, *fit.block.consts.sigma2};
    if (!(*fit.block.consts.sigma2 > 0.0))
      throw DegenerateDataError("rtdm: estimated sigma2 is zero; pseudo-data likelihood undefined");
  } else {
    fit.pseudo_length =
        cfg.pseudo_doc_length > 0 ? cfg.pseudo_doc_length : median_length(fit.block.lengths);
    if (fit.pseudo_length < 3)
      throw InsufficientLengthError("rtdm: pseudo-document length must be >= 3");
    fit.likelihood = LdaModel{fit.a_t.a, consts.alpha_b, fit.pseudo_length, cfg.lda_surrogate};
  }
  return fit;
}

PseudoDataLoss::PseudoDataLoss(const TrainingFit& fit, Regularizer reg, const RtdmConfig& cfg)
    : fit_(fit), reg_(std::move(reg)), cfg_(cfg) {
  pipeline_.tdm = cfg.tdm;
  pipeline_.pseudo_length = static_cast<double>(fit.pseudo_length);
  pipeline_.recompute_training = !cfg.cache_training_moments;
  pipeline_.eigen_gap_tol = cfg.eigen_gap_tol;
}

LossEvaluation PseudoDataLoss::forward(const Eigen::MatrixXd& x_p, PipelineTape* tape,
                                       Eigen::MatrixXd* reg_grad) const {
  PipelineTape local = combined_forward(fit_.block, x_p, pipeline_);
  LossEvaluation ev;
  const LogLikelihood ll = std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GmmModel>)
          return gmm_loglik(x_p, m);
        else
          return lda_surrogate_loglik(x_p, m);
      },
      fit_.likelihood);
  ev.data_term = -ll.value;
  ev.grad = -ll.grad;
  // R sees the reported parameters; for LDA that is the simplex projection.
  const bool projected = fit_.block.consts.model == ModelKind::Lda;
  const RegValue r = reg_.evaluate(projected ? local.result.a : local.result.a_raw);
  ev.reg_value = r.value;
  ev.reg_term = cfg_.lambda * reg_.loss_sign() * r.value;
  ev.loss = ev.data_term + ev.reg_term;
  ev.combined = local.result;
  if (reg_grad) *reg_grad = projected ? simplex_projection_vjp(local.result.a, r.grad) : r.grad;
  if (tape) *tape = std::move(local);
  return ev;
}

LossEvaluation PseudoDataLoss::evaluate(const Eigen::MatrixXd& x_p, bool with_gradient) const {
  if (!with_gradient) {
    LossEvaluation ev = forward(x_p, nullptr, nullptr);
    ev.grad.resize(0, 0);
    return ev;
  }
  if (cfg_.gradient_mode == GradientMode::FiniteDifference) {
    LossEvaluation ev = forward(x_p, nullptr, nullptr);
    ev.grad = finite_difference_gradient(x_p);
    return ev;
  }
  PipelineTape tape;
  Eigen::MatrixXd reg_grad;
  LossEvaluation ev = forward(x_p, &tape, &reg_grad);
  if (cfg_.lambda != 0.0) {
    const Eigen::MatrixXd a_bar = cfg_.lambda * reg_.loss_sign() * reg_grad;
    try {
      ev.grad += combined_backward(fit_.block, x_p, tape, a_bar, pipeline_);
    } catch (const DegenerateSpectrumError&) {
      if (!cfg_.fd_fallback) throw;
      ev.grad = finite_difference_gradient(x_p);
      ev.used_fd_fallback = true;
    }
  }
  return ev;
}

double PseudoDataLoss::value(const Eigen::MatrixXd& x_p) const {
  return forward(x_p, nullptr, nullptr).loss;
}

Eigen::MatrixXd PseudoDataLoss::adjoint_gradient(const Eigen::MatrixXd& x_p) const {
  RtdmConfig strict = cfg_;
  strict.gradient_mode = GradientMode::Adjoint;
  strict.fd_fallback = false;
  return PseudoDataLoss(fit_, reg_, strict).evaluate(x_p, true).grad;
}

Eigen::MatrixXd PseudoDataLoss::finite_difference_gradient(const Eigen::MatrixXd& x_p) const {
  Eigen::MatrixXd grad(x_p.rows(), x_p.cols());
  Eigen::MatrixXd probe = x_p;
  const double h = cfg_.fd_step;
  for (Eigen::Index j = 0; j < x_p.cols(); ++j) {
    for (Eigen::Index i = 0; i < x_p.rows(); ++i) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = value(probe);
      probe(i, j) = orig - h;
      const double down = value(probe);
      probe(i, j) = orig;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

double loss(const TrainingFit& fit, const Eigen::MatrixXd& x_p, const Regularizer& reg,
            const RtdmConfig& cfg) {
  return PseudoDataLoss(fit, reg, cfg).value(x_p);
}

Eigen::MatrixXd loss_gradient(const TrainingFit& fit, const Eigen::MatrixXd& x_p,
                              const Regularizer& reg, const RtdmConfig& cfg) {
  return PseudoDataLoss(fit, reg, cfg).evaluate(x_p, true).grad;
}

void RtdmTrace::write_csv(std::ostream& out) const {
  out << "iter,loss,data_term,reg_term,delta_xp,eval_metric\n";
  for (const auto& r : records) {
    out << r.iter << ',' << format_double(r.loss) << ',' << format_double(r.data_term) << ','
        << format_double(r.reg_term) << ',' << format_double(r.delta_xp) << ','
        << format_double(r.eval_metric) << '\n';
  }
}

Eigen::MatrixXd initial_pseudo_parameters(const TrainingFit& fit, const RtdmConfig& cfg) {
  if (const auto* gmm = std::get_if<GmmModel>(&fit.likelihood))
    return gmm_sample(*gmm, cfg.n_p, cfg.seed).x;
  const auto& lda = std::get<LdaModel>(fit.likelihood);
  const Eigen::MatrixXd docs = lda_sample(lda, cfg.n_p, cfg.seed).x;
  return (docs.array() + cfg.pseudo_count_smoothing).log().matrix();
}

Eigen::MatrixXd pseudo_observations(const TrainingFit& fit, const Eigen::MatrixXd& params) {
  if (fit.block.consts.model == ModelKind::Gmm) return params;
  return static_cast<double>(fit.pseudo_length) * softmax_columns(params);
}

RtdmResult rtdm_run(const Eigen::MatrixXd& x_t, const ModelConstants& consts,
                    const Regularizer& reg, const RtdmConfig& cfg, const IterationMetric& metric) {
  const TrainingFit fit = fit_training(x_t, consts, cfg);
  return rtdm_run(fit, reg, cfg, metric);
}

RtdmResult rtdm_run(const TrainingFit& fit, const Regularizer& reg, const RtdmConfig& cfg,
                    const IterationMetric& metric) {
  if (!(cfg.epsilon > 0.0)) throw ConfigError("rtdm: epsilon must be positive");
  if (cfg.max_iters < 1) throw ConfigError("rtdm: max_iters must be >= 1");
  if (!(cfg.adam.step_size > 0.0)) throw ConfigError("rtdm: ADAM step size must be positive");
  if (cfg.n_p < 0) throw ConfigError("rtdm: n_p must be nonnegative");
  if (cfg.lambda < 0.0) throw ConfigError("rtdm: lambda must be nonnegative");

  RtdmResult out;
  out.a_t = fit.a_t;
  if (cfg.n_p == 0) {
    out.result = fit.a_t;
    out.converged = true;
    out.stop = StopReason::Converged;
    out.x_p = Eigen::MatrixXd(fit.block.x.rows(), 0);
    return out;
  }

  const bool lda = fit.block.consts.model == ModelKind::Lda;
  const PseudoDataLoss objective(fit, reg, cfg);
  Eigen::MatrixXd params = initial_pseudo_parameters(fit, cfg);
  Eigen::MatrixXd x = pseudo_observations(fit, params);
  AdamState state;
  double best_loss = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_x = x;

  for (int it = 0; it < cfg.max_iters; ++it) {
    LossEvaluation ev;
    try {
      ev = objective.evaluate(x, true);
    } catch (const Error& e) {
      const std::string msg = "rtdm iteration " + std::to_string(it) + ": " + e.what();
      if (it == 0) throw NumericError(msg);
      // The last step left the region where the decomposition is defined;
      // keep the best iterate seen so far.
      out.stop = StopReason::Infeasible;
      out.stop_message = msg;
      break;
    }
    IterationRecord rec;
    rec.iter = it;
    rec.loss = ev.loss;
    rec.data_term = ev.data_term;
    rec.reg_term = ev.reg_term;
    rec.reg_value = ev.reg_value;
    rec.fd_fallback = ev.used_fd_fallback;
    if (metric) rec.eval_metric = metric(ev.combined);
    if (ev.loss < best_loss) {
      best_loss = ev.loss;
      best_x = x;
    }

    Eigen::MatrixXd g = ev.grad;
    if (lda) {
      // c = ℓ softmax(z)  ⇒  ∂L/∂z = ℓ (p ∘ g − p (p·g)) per column.
      const Eigen::MatrixXd p = softmax_columns(params);
      const double ell = static_cast<double>(fit.pseudo_length);
      for (Eigen::Index n = 0; n < p.cols(); ++n) {
        const double pg = p.col(n).dot(ev.grad.col(n));
        g.col(n) = ell * (p.col(n).array() * (ev.grad.col(n).array() - pg)).matrix();
      }
    }
    adam_step(params, g, state, cfg.adam);
    const Eigen::MatrixXd x_new = pseudo_observations(fit, params);
    rec.delta_xp = (x_new - x).norm();
    out.trace.records.push_back(rec);
    x = x_new;
    out.iterations = it + 1;
    if (rec.delta_xp <= cfg.epsilon) {
      out.converged = true;
      out.stop = StopReason::Converged;
      break;
    }
  }

  out.x_p = out.converged ? x : best_x;
  PipelineOptions popts = objective.pipeline_options();
  out.result = combined_forward(fit.block, out.x_p, popts).result;
  return out;
}

}  // namespace tdreg
