#include "tdreg/harness/experiments.hpp"

#include <string>

#include "tdreg/harness/synthetic.hpp"
#include "tdreg/heading_tree.hpp"
#include "tdreg/rtdm.hpp"

namespace tdreg::harness {

namespace {

enum Stream : std::uint64_t { kTruth = 1, kTrain = 2, kTest = 3, kPrior = 4, kNoise = 5 };

std::string indexed(const std::string& name, std::size_t i) {
  return name + "[" + std::to_string(i) + "]";
}

TreeDistances load_tree_distances(const ExperimentConfig& cfg, HeadingTree* out = nullptr) {
  HeadingTree tree = HeadingTree::load(cfg.tree_file);
  if (static_cast<int>(tree.size()) != cfg.d)
    throw ConfigError("field 'model.d' must equal the number of headings in model.tree_file (" +
                      std::to_string(tree.size()) + ")");
  TreeDistances td = build_tree_distance(tree);
  if (out) *out = std::move(tree);
  return td;
}

Eigen::MatrixXd draw(const Model& truth, int n, std::uint64_t seed) {
  if (const auto* g = std::get_if<GmmModel>(&truth)) return gmm_sample(*g, n, seed).x;
  return lda_sample(std::get<LdaModel>(truth), n, seed).x;
}

const Eigen::MatrixXd& topics_of(const Model& m) {
  return std::visit([](const auto& x) -> const Eigen::MatrixXd& { return x.a; }, m);
}

// Rows for one (seed, λ, N_P) cell; metric names carry an optional "nt=N/" scope.
class CellWriter {
 public:
  CellWriter(ResultTable& table, const ExperimentConfig& cfg, std::uint64_t seed, double lambda,
             int n_p, int n_t, bool always_scope = false)
      : table_(table), exp_(to_string(cfg.experiment)), seed_(seed), lambda_(lambda), n_p_(n_p) {
    if (always_scope || cfg.n_t.size() > 1) scope_ = "nt=" + std::to_string(n_t) + "/";
  }

  void add(const std::string& name, double v) {
    table_.add(exp_, seed_, lambda_, n_p_, scope_ + name, v);
  }
  void series(const std::string& name, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) add(indexed(name, i), values[i]);
  }
  void run_summary(const RtdmResult& r) {
    std::vector<double> loss, reg;
    for (const auto& rec : r.trace.records) {
      loss.push_back(rec.loss);
      reg.push_back(rec.reg_value);
    }
    series("loss", loss);
    series("reg", reg);
    add("iterations", r.iterations);
    add("converged", r.converged ? 1.0 : 0.0);
    add("stopped_infeasible", r.stop == StopReason::Infeasible ? 1.0 : 0.0);
  }

 private:
  ResultTable& table_;
  std::string exp_;
  std::uint64_t seed_;
  double lambda_;
  int n_p_;
  std::string scope_;
};

}  // namespace

Model ground_truth(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::uint64_t s = derive_seed(seed, kTruth);
  switch (cfg.experiment) {
    case ExperimentKind::GaussPrior:
      return GmmModel{gaussian_means(cfg.d, cfg.k, cfg.sigma_m2, s),
                      Eigen::VectorXd::Constant(cfg.k, 1.0 / cfg.k), cfg.sigma2};
    case ExperimentKind::Transfer:
    case ExperimentKind::AntiCorr:
      return LdaModel{dirichlet_topics(cfg.d, cfg.k, cfg.topic_concentration, s), cfg.alpha_b,
                      cfg.doc_length};
    case ExperimentKind::Mesh:
      return LdaModel{tree_local_topics(load_tree_distances(cfg).o, cfg.k, cfg.topic_locality, s),
                      cfg.alpha_b, cfg.doc_length};
    case ExperimentKind::Sparsity:
      return LdaModel{dirichlet_topics(cfg.d, cfg.k, cfg.alpha_a, s), cfg.alpha_b, cfg.doc_length};
  }
  throw ConfigError("unhandled experiment kind");
}

Eigen::MatrixXd training_data(const ExperimentConfig& cfg, const Model& truth, int n_t,
                              std::uint64_t seed) {
  Eigen::MatrixXd x = draw(truth, n_t, derive_seed(seed, kTrain));
  if (cfg.experiment == ExperimentKind::Sparsity && cfg.noise_rate > 0.0)
    x = add_poisson_noise(x, cfg.noise_rate, derive_seed(seed, kNoise));
  return x;
}

Eigen::MatrixXd test_data(const ExperimentConfig& cfg, const Model& truth, std::uint64_t seed) {
  return draw(truth, std::max(cfg.n_test, 1), derive_seed(seed, kTest));
}

Eigen::MatrixXd transfer_prior(const ExperimentConfig& cfg, const Eigen::MatrixXd& a_true,
                               std::uint64_t seed) {
  return perturbed_topics(a_true, cfg.prior_perturbation, derive_seed(seed, kPrior));
}

ModelConstants model_constants(const ExperimentConfig& cfg) {
  if (model_of(cfg.experiment) == ModelKind::Gmm)
    return cfg.known_sigma2 ? ModelConstants::gmm(cfg.k, cfg.sigma2) : ModelConstants::gmm(cfg.k);
  return ModelConstants::lda(cfg.k, cfg.alpha_b);
}

Regularizer make_regularizer(const ExperimentConfig& cfg, const Eigen::MatrixXd* prior) {
  switch (cfg.experiment) {
    case ExperimentKind::GaussPrior: return Regularizer::gaussian_prior(cfg.sigma_m2);
    case ExperimentKind::Transfer:
      if (!prior) throw ConfigError("the transfer regularizer needs a prior topic matrix");
      return Regularizer::transfer_l2(*prior);
    case ExperimentKind::AntiCorr: return Regularizer::anti_correlation();
    case ExperimentKind::Mesh: return Regularizer::tree_distance(load_tree_distances(cfg).o_star);
    case ExperimentKind::Sparsity: return Regularizer::dirichlet_sparsity(cfg.alpha_a, cfg.sparsity_floor);
  }
  throw ConfigError("unhandled experiment kind");
}

ResultTable run_gauss_prior(const ExperimentConfig& cfg) {
  ResultTable table;
  const Regularizer reg = make_regularizer(cfg);
  for (std::uint64_t seed : cfg.seeds) {
    const Model truth = ground_truth(cfg, seed);
    const Eigen::MatrixXd& a = topics_of(truth);
    const Eigen::MatrixXd x_test = test_data(cfg, truth, seed);
    for (int n_t : cfg.n_t) {
      const TrainingFit fit = fit_training(training_data(cfg, truth, n_t, seed),
                                           model_constants(cfg), rtdm_config(cfg, 0.0, 0, seed));
      const double s2 = *fit.block.consts.sigma2;
      auto test_ll = [&](const DecompositionResult& r) {
        return heldout_eval(x_test, GmmModel{r.a, r.weights, s2});
      };
      for (int n_p : cfg.n_p) {
        for (double lambda : lambda_grid(cfg, n_p)) {
          std::vector<double> ll, err;
          const RtdmResult r = rtdm_run(fit, reg, rtdm_config(cfg, lambda, n_p, seed),
                                        [&](const DecompositionResult& c) {
                                          err.push_back(aligned_relative_error(c.a, a));
                                          return ll.emplace_back(test_ll(c));
                                        });
          CellWriter w(table, cfg, seed, lambda, n_p, n_t);
          w.add("tdm_error", aligned_relative_error(fit.a_t.a, a));
          w.add("rtdm_error", aligned_relative_error(r.result.a, a));
          w.add("tdm_test_loglik", test_ll(fit.a_t));
          w.add("rtdm_test_loglik", test_ll(r.result));
          w.add("sigma2_hat", s2);
          w.series("test_loglik", ll);
          w.series("error", err);
          w.run_summary(r);
        }
      }
    }
  }
  return table;
}

ResultTable run_transfer(const ExperimentConfig& cfg) {
  ResultTable table;
  for (std::uint64_t seed : cfg.seeds) {
    const Model truth = ground_truth(cfg, seed);
    const Eigen::MatrixXd& a = topics_of(truth);
    const Eigen::MatrixXd prior = transfer_prior(cfg, a, seed);
    const Regularizer reg = make_regularizer(cfg, &prior);
    for (int n_t : cfg.n_t) {
      const TrainingFit fit = fit_training(training_data(cfg, truth, n_t, seed),
                                           model_constants(cfg), rtdm_config(cfg, 0.0, 0, seed));
      for (int n_p : cfg.n_p) {
        for (double lambda : lambda_grid(cfg, n_p)) {
          std::vector<double> eps, dist;
          const RtdmResult r = rtdm_run(fit, reg, rtdm_config(cfg, lambda, n_p, seed),
                                        [&](const DecompositionResult& c) {
                                          dist.push_back(aligned_distance(c.a, prior));
                                          return eps.emplace_back(aligned_distance(c.a, a));
                                        });
          CellWriter w(table, cfg, seed, lambda, n_p, n_t, true);
          w.add("eps_tdm", aligned_distance(fit.a_t.a, a));
          w.add("eps_final", aligned_distance(r.result.a, a));
          w.add("prior_dist_tdm", aligned_distance(fit.a_t.a, prior));
          w.add("prior_dist_final", aligned_distance(r.result.a, prior));
          w.add("prior_eps", aligned_distance(prior, a));
          w.series("eps", eps);
          w.series("prior_dist", dist);
          w.run_summary(r);
        }
      }
    }
  }
  return table;
}

ResultTable run_anticorr(const ExperimentConfig& cfg) {
  ResultTable table;
  const Regularizer reg = make_regularizer(cfg);
  for (std::uint64_t seed : cfg.seeds) {
    const Model truth = ground_truth(cfg, seed);
    const Eigen::MatrixXd& a = topics_of(truth);
    for (int n_t : cfg.n_t) {
      const TrainingFit fit = fit_training(training_data(cfg, truth, n_t, seed),
                                           model_constants(cfg), rtdm_config(cfg, 0.0, 0, seed));
      for (int n_p : cfg.n_p) {
        for (double lambda : lambda_grid(cfg, n_p)) {
          std::vector<double> corr;
          const RtdmResult r = rtdm_run(fit, reg, rtdm_config(cfg, lambda, n_p, seed),
                                        [&](const DecompositionResult& c) {
                                          return corr.emplace_back(anti_correlation_reg(c.a).value);
                                        });
          CellWriter w(table, cfg, seed, lambda, n_p, n_t);
          w.add("correlation", anti_correlation_reg(r.result.a).value);
          w.add("correlation_tdm", anti_correlation_reg(fit.a_t.a).value);
          w.add("error", aligned_distance(r.result.a, a));
          w.add("error_tdm", aligned_distance(fit.a_t.a, a));
          w.series("correlation", corr);
          w.run_summary(r);
        }
      }
    }
  }
  return table;
}

ResultTable run_mesh(const ExperimentConfig& cfg, std::vector<TopicEntry>* topics) {
  ResultTable table;
  HeadingTree tree;
  const TreeDistances td = load_tree_distances(cfg, &tree);
  const Regularizer reg = Regularizer::tree_distance(td.o_star);
  bool first_seed = true;
  for (std::uint64_t seed : cfg.seeds) {
    const Model truth = ground_truth(cfg, seed);
    const Eigen::MatrixXd& a = topics_of(truth);
    const Eigen::MatrixXd x_test = test_data(cfg, truth, seed);
    auto heldout = [&](const Eigen::MatrixXd& topics_a) {
      return heldout_eval(x_test, LdaModel{topics_a, cfg.alpha_b, cfg.doc_length});
    };
    for (int n_t : cfg.n_t) {
      const TrainingFit fit = fit_training(training_data(cfg, truth, n_t, seed),
                                           model_constants(cfg), rtdm_config(cfg, 0.0, 0, seed));
      const std::string tag = cfg.n_t.size() > 1 ? " n_t=" + std::to_string(n_t) : "";
      if (topics && first_seed) {
        auto t = top_headings(fit.a_t.a, tree, "tdm" + tag);
        topics->insert(topics->end(), t.begin(), t.end());
      }
      for (int n_p : cfg.n_p) {
        for (double lambda : lambda_grid(cfg, n_p)) {
          std::vector<double> treg;
          const RtdmResult r = rtdm_run(fit, reg, rtdm_config(cfg, lambda, n_p, seed),
                                        [&](const DecompositionResult& c) {
                                          return treg.emplace_back(tree_reg(c.a, td.o_star).value);
                                        });
          CellWriter w(table, cfg, seed, lambda, n_p, n_t);
          w.add("tree_reg", tree_reg(r.result.a, td.o_star).value);
          w.add("tree_reg_tdm", tree_reg(fit.a_t.a, td.o_star).value);
          w.add("heldout_loglik", heldout(r.result.a));
          w.add("heldout_loglik_tdm", heldout(fit.a_t.a));
          w.add("error", aligned_distance(r.result.a, a));
          w.add("error_tdm", aligned_distance(fit.a_t.a, a));
          w.series("tree_reg", treg);
          w.run_summary(r);
          if (topics && first_seed) {
            auto t = top_headings(r.result.a, tree,
                                  "rtdm n_p=" + std::to_string(n_p) +
                                      " lambda=" + format_double(lambda) + tag);
            topics->insert(topics->end(), t.begin(), t.end());
          }
        }
      }
    }
    first_seed = false;
  }
  return table;
}

ResultTable run_sparsity(const ExperimentConfig& cfg) {
  ResultTable table;
  const Regularizer reg = make_regularizer(cfg);
  constexpr double kSupportThreshold = 0.01;
  for (std::uint64_t seed : cfg.seeds) {
    const Model truth = ground_truth(cfg, seed);
    const Eigen::MatrixXd& a = topics_of(truth);
    const Eigen::VectorXi truth_support = column_support(a, kSupportThreshold);
    for (int n_t : cfg.n_t) {
      const TrainingFit fit = fit_training(training_data(cfg, truth, n_t, seed),
                                           model_constants(cfg), rtdm_config(cfg, 0.0, 0, seed));
      const Eigen::VectorXi before =
          column_support(align_columns(fit.a_t.a, a).aligned, kSupportThreshold);
      for (int n_p : cfg.n_p) {
        // Same pseudo-data with λ=0 isolates the regularizer from the pseudo-data itself.
        const RtdmResult plain = rtdm_run(fit, reg, rtdm_config(cfg, 0.0, n_p, seed));
        const Eigen::VectorXi unreg =
            column_support(align_columns(plain.result.a, a).aligned, kSupportThreshold);
        for (double lambda : lambda_grid(cfg, n_p)) {
          std::vector<double> err;
          const RtdmResult r = rtdm_run(fit, reg, rtdm_config(cfg, lambda, n_p, seed),
                                        [&](const DecompositionResult& c) {
                                          return err.emplace_back(aligned_distance(c.a, a));
                                        });
          const Eigen::VectorXi after =
              column_support(align_columns(r.result.a, a).aligned, kSupportThreshold);
          CellWriter w(table, cfg, seed, lambda, n_p, n_t);
          w.add("error_before", aligned_distance(fit.a_t.a, a));
          w.add("error_after", aligned_distance(r.result.a, a));
          w.add("error_unregularized", aligned_distance(plain.result.a, a));
          w.add("support_before", before.sum());
          w.add("support_unregularized", unreg.sum());
          w.add("support_after", after.sum());
          w.add("support_true", truth_support.sum());
          for (int k = 0; k < cfg.k; ++k) {
            w.add("support_before/topic" + std::to_string(k), before(k));
            w.add("support_unregularized/topic" + std::to_string(k), unreg(k));
            w.add("support_after/topic" + std::to_string(k), after(k));
          }
          w.series("error", err);
          w.run_summary(r);
        }
      }
    }
  }
  return table;
}

ResultTable run_experiment(const ExperimentConfig& cfg, std::vector<TopicEntry>* topics) {
  switch (cfg.experiment) {
    case ExperimentKind::GaussPrior: return run_gauss_prior(cfg);
    case ExperimentKind::Transfer: return run_transfer(cfg);
    case ExperimentKind::AntiCorr: return run_anticorr(cfg);
    case ExperimentKind::Mesh: return run_mesh(cfg, topics);
    case ExperimentKind::Sparsity: return run_sparsity(cfg);
  }
  throw ConfigError("unhandled experiment kind");
}

}  // namespace tdreg::harness
