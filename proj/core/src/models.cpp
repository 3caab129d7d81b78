#include "tdreg/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <unsupported/Eigen/SpecialFunctions>

#include "tdreg/errors.hpp"

namespace tdreg {

void validate(const GmmModel& m) {
  if (m.weights.size() != m.a.cols()) throw ShapeError("GmmModel: one weight per component");
  if ((m.weights.array() < 0.0).any() || std::abs(m.weights.sum() - 1.0) > 1e-8)
    throw DomainError("GmmModel: weights must lie on the simplex");
  if (!(m.sigma2 > 0.0)) throw DomainError("GmmModel: sigma2 must be positive");
}

void validate(const LdaModel& m) {
  if (!(m.alpha_b > 0.0)) throw DomainError("LdaModel: alpha_b must be positive");
  if (m.doc_length < 3) throw DomainError("LdaModel: documents need at least 3 words");
  for (Eigen::Index k = 0; k < m.a.cols(); ++k) {
    if ((m.a.col(k).array() < -1e-10).any() || std::abs(m.a.col(k).sum() - 1.0) > 1e-10)
      throw DomainError("LdaModel: topic " + std::to_string(k) + " is not on the simplex");
  }
}

Dataset gmm_sample(const GmmModel& model, int n, std::uint64_t seed) {
  if (n < 1) throw DegenerateDataError("gmm_sample: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(model.weights.data(),
                                       model.weights.data() + model.weights.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(std::max(0.0, model.sigma2));
  Dataset out;
  out.x.resize(model.a.rows(), n);
  out.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int h = pick(rng);
    out.labels[static_cast<std::size_t>(i)] = h;
    for (Eigen::Index d = 0; d < model.a.rows(); ++d) out.x(d, i) = model.a(d, h) + sd * normal(rng);
  }
  return out;
}

Dataset lda_sample(const LdaModel& model, int n, std::uint64_t seed) {
  if (n < 1) throw DegenerateDataError("lda_sample: n must be >= 1");
  const Eigen::Index d = model.a.rows();
  const Eigen::Index k = model.a.cols();
  std::mt19937_64 rng(seed);
  std::vector<std::discrete_distribution<int>> words;
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::VectorXd col = model.a.col(j).cwiseMax(0.0);
    words.emplace_back(col.data(), col.data() + d);
  }
  const bool uniform = !std::isfinite(model.alpha_b);
  std::gamma_distribution<double> gamma(uniform ? 1.0 : model.alpha_b, 1.0);
  Dataset out;
  out.x = Eigen::MatrixXd::Zero(d, n);
  out.labels.resize(static_cast<std::size_t>(n));
  Eigen::VectorXd b(k);
  for (int i = 0; i < n; ++i) {
    if (uniform) {
      b.setConstant(1.0 / static_cast<double>(k));
    } else {
      for (Eigen::Index j = 0; j < k; ++j) b(j) = gamma(rng);
      const double s = b.sum();
      if (s > 0.0) {
        b /= s;
      } else {
        // Every gamma draw underflowed (tiny α_B): fall back to one topic.
        b.setZero();
        b(std::uniform_int_distribution<Eigen::Index>(0, k - 1)(rng)) = 1.0;
      }
    }
    Eigen::Index top = 0;
    b.maxCoeff(&top);
    out.labels[static_cast<std::size_t>(i)] = static_cast<int>(top);
    std::discrete_distribution<int> topic(b.data(), b.data() + k);
    for (int w = 0; w < model.doc_length; ++w) {
      const int z = topic(rng);
      out.x(words[static_cast<std::size_t>(z)](rng), i) += 1.0;
    }
  }
  return out;
}

LogLikelihood gmm_loglik(const Eigen::MatrixXd& x, const GmmModel& model) {
  if (!(model.sigma2 > 0.0)) throw DomainError("gmm_loglik: sigma2 must be positive");
  if (!x.allFinite()) throw NumericError("gmm_loglik: non-finite observation");
  if (x.rows() != model.a.rows()) throw ShapeError("gmm_loglik: dimension mismatch");
  const double d = static_cast<double>(x.rows());
  const Eigen::Index k = model.a.cols();
  const double norm = -0.5 * d * std::log(2.0 * std::numbers::pi * model.sigma2);
  LogLikelihood out;
  out.grad.resize(x.rows(), x.cols());
  Eigen::VectorXd logp(k);
  for (Eigen::Index n = 0; n < x.cols(); ++n) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double w = model.weights(j);
      logp(j) = w > 0.0 ? std::log(w) + norm -
                              (x.col(n) - model.a.col(j)).squaredNorm() / (2.0 * model.sigma2)
                        : -std::numeric_limits<double>::infinity();
    }
    const double top = logp.maxCoeff();
    const Eigen::VectorXd r = (logp.array() - top).exp().matrix();
    const double total = r.sum();
    out.value += top + std::log(total);
    out.grad.col(n) = (model.a * (r / total) - x.col(n)) / model.sigma2;
  }
  return out;
}

std::string_view to_string(LdaSurrogate s) {
  switch (s) {
    case LdaSurrogate::Multinomial: return "multinomial";
    case LdaSurrogate::Linear: return "linear";
    case LdaSurrogate::Mixture: return "mixture";
  }
  return "unknown";
}

LdaSurrogate parse_lda_surrogate(std::string_view name) {
  if (name == "multinomial") return LdaSurrogate::Multinomial;
  if (name == "linear") return LdaSurrogate::Linear;
  if (name == "mixture") return LdaSurrogate::Mixture;
  throw ConfigError("unknown LDA likelihood '" + std::string(name) +
                    "' (expected multinomial, linear or mixture)");
}

LogLikelihood lda_surrogate_loglik(const Eigen::MatrixXd& docs, const LdaModel& model) {
  if ((docs.array() < 0.0).any()) throw DomainError("lda_surrogate_loglik: negative count");
  if (docs.rows() != model.a.rows()) throw ShapeError("lda_surrogate_loglik: dimension mismatch");
  LogLikelihood out;
  if (model.surrogate == LdaSurrogate::Mixture) {
    // log Σ_k (1/K) Π_d a_dk^{c_d}, stabilized per document.
    const Eigen::MatrixXd loga = (model.a.array() + kProbabilityFloor).log().matrix();
    const Eigen::MatrixXd s = loga.transpose() * docs;  // K×N
    const double log_k = std::log(static_cast<double>(model.a.cols()));
    out.grad.resize(docs.rows(), docs.cols());
    for (Eigen::Index n = 0; n < docs.cols(); ++n) {
      const double top = s.col(n).maxCoeff();
      const Eigen::ArrayXd r = (s.col(n).array() - top).exp();
      const double total = r.sum();
      out.value += top + std::log(total) - log_k;
      out.grad.col(n) = loga * (r / total).matrix();
    }
  } else {
    const Eigen::VectorXd mean_topic = model.a.rowwise().mean();
    const Eigen::VectorXd logp = (mean_topic.array() + kProbabilityFloor).log().matrix();
    out.value = (logp.transpose() * docs).sum();
    out.grad = logp.replicate(1, docs.cols());
  }
  if (model.surrogate != LdaSurrogate::Linear) {
    const Eigen::ArrayXXd c1 = docs.array() + 1.0;
    const Eigen::ArrayXd len1 = docs.colwise().sum().transpose().array() + 1.0;
    out.value += len1.lgamma().sum() - c1.lgamma().sum();
    out.grad.array() -= c1.digamma();
    out.grad.array().rowwise() += len1.digamma().transpose();
  }
  return out;
}

double heldout_eval(const Eigen::MatrixXd& x, const Model& model) {
  if (x.cols() < 1) throw DegenerateDataError("heldout_eval: empty test set");
  const double total = std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GmmModel>)
          return gmm_loglik(x, m).value;
        else
          return lda_surrogate_loglik(x, m).value;
      },
      model);
  return total / static_cast<double>(x.cols());
}

}  // namespace tdreg
