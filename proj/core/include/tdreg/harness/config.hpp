#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tdreg/decomposition.hpp"
#include "tdreg/rtdm.hpp"
#include "tdreg/types.hpp"

namespace tdreg::harness {

enum class ExperimentKind { GaussPrior, Transfer, AntiCorr, Mesh, Sparsity };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);
ModelKind model_of(ExperimentKind kind);

struct OptimizerSettings {
  AdamOptions adam;
  double epsilon = 1e-6;
  int max_iters = 200;
  GradientMode gradient_mode = GradientMode::Adjoint;
  int pseudo_doc_length = 0;
  double pseudo_count_smoothing = 0.1;
  LdaSurrogate lda_likelihood = LdaSurrogate::Multinomial;
};

/// Everything one experiment run needs. See README for the JSON layout.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::GaussPrior;

  int d = 0;
  int k = 0;
  std::vector<int> n_t;
  int n_test = 0;

  // GMM generator
  double sigma_m2 = 1.0;
  double sigma2 = 1.0;
  bool known_sigma2 = false;  // fit with the generating σ² instead of estimating it
  // LDA generator
  double alpha_b = 1.0;
  int doc_length = 20;
  double topic_concentration = 1.0;
  double prior_perturbation = 0.0;  // transfer: scale of A_prior − A_true
  double noise_rate = 0.0;          // sparsity: Poisson rate added to every count
  double alpha_a = 0.1;             // sparsity: topic prior and regularizer parameter
  double sparsity_floor = 1e-12;    // sparsity: entries at or below count as zero
  double topic_locality = 1.0;      // mesh: decay length of topics on the tree
  std::string tree_file;            // mesh

  std::vector<int> n_p;
  std::vector<double> lambda;
  std::vector<double> lambda_per_np;  // alternative grid: λ = value · N_P
  std::vector<std::uint64_t> seeds;
  OptimizerSettings optimizer;
  PowerMethodOptions power;

  std::string output;
};

/// Parses and validates a JSON document. Relative paths inside it resolve
/// against `base_dir`. Throws ConfigError naming the offending field.
ExperimentConfig parse_config(std::string_view json_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& cfg);

/// The bundled default configuration of an experiment.
ExperimentConfig default_config(ExperimentKind kind);

/// Splits one seed into independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// The λ values swept at one N_P.
std::vector<double> lambda_grid(const ExperimentConfig& cfg, int n_p);

/// RTDM settings for one grid cell.
RtdmConfig rtdm_config(const ExperimentConfig& cfg, double lambda, int n_p, std::uint64_t seed);

}  // namespace tdreg::harness
