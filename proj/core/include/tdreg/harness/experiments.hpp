#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tdreg/models.hpp"
#include "tdreg/regularizers.hpp"

#include "tdreg/harness/config.hpp"
#include "tdreg/harness/result_table.hpp"
#include "tdreg/harness/topic_table.hpp"

namespace tdreg::harness {

// Building blocks shared by the runners and the CLI. Each draws from its own
// stream of `seed`, so the CLI regenerates exactly what a runner sees.

/// Generating parameters. Mesh loads cfg.tree_file.
Model ground_truth(const ExperimentConfig& cfg, std::uint64_t seed);
/// Training observations, with Poisson noise for the sparsity experiment.
Eigen::MatrixXd training_data(const ExperimentConfig& cfg, const Model& truth, int n_t,
                              std::uint64_t seed);
Eigen::MatrixXd test_data(const ExperimentConfig& cfg, const Model& truth, std::uint64_t seed);
/// A_prior for the transfer experiment.
Eigen::MatrixXd transfer_prior(const ExperimentConfig& cfg, const Eigen::MatrixXd& a_true,
                               std::uint64_t seed);
ModelConstants model_constants(const ExperimentConfig& cfg);
/// Transfer needs `prior`; mesh loads cfg.tree_file.
Regularizer make_regularizer(const ExperimentConfig& cfg,
                             const Eigen::MatrixXd* prior = nullptr);

ResultTable run_gauss_prior(const ExperimentConfig& cfg);
ResultTable run_transfer(const ExperimentConfig& cfg);
ResultTable run_anticorr(const ExperimentConfig& cfg);
/// `topics`, when given, receives the top-8 heading tables.
ResultTable run_mesh(const ExperimentConfig& cfg, std::vector<TopicEntry>* topics = nullptr);
ResultTable run_sparsity(const ExperimentConfig& cfg);

ResultTable run_experiment(const ExperimentConfig& cfg, std::vector<TopicEntry>* topics = nullptr);

}  // namespace tdreg::harness
