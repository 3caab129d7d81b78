// Command-line front end: data generation, plain and regularized fits,
// evaluation and the experiment runners.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tdreg/errors.hpp"
#include "tdreg/harness/config.hpp"
#include "tdreg/harness/experiments.hpp"
#include "tdreg/harness/io.hpp"
#include "tdreg/harness/synthetic.hpp"
#include "tdreg/harness/topic_table.hpp"
#include "tdreg/rtdm.hpp"

namespace fs = std::filesystem;
using namespace tdreg;
using namespace tdreg::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonArgs {
  std::string config;
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig resolve_config(const CommonArgs& args) {
  if (!args.config.empty()) return load_config(args.config);
  if (!args.experiment.empty()) return default_config(parse_experiment_kind(args.experiment));
  throw ConfigError("either --config or --experiment is required");
}

std::uint64_t first_seed(const CommonArgs& args, const ExperimentConfig& cfg) {
  return args.seed ? *args.seed : cfg.seeds.front();
}

// --out wins; otherwise `fallback` under $TDREG_OUTPUT_DIR (or the working directory).
fs::path output_path(const std::string& out, const std::string& fallback) {
  if (!out.empty()) return out;
  if (fallback.empty()) throw ConfigError("--out is required");
  const char* dir = std::getenv("TDREG_OUTPUT_DIR");
  return (dir && *dir) ? fs::path(dir) / fallback : fs::path(fallback);
}

fs::path with_suffix(const fs::path& p, const std::string& suffix, const std::string& ext) {
  return p.parent_path() / (p.stem().string() + suffix + ext);
}

void add_common(CLI::App* cmd, CommonArgs& args, bool config_only = false) {
  cmd->add_option("--config", args.config, "Experiment config file (JSON)");
  if (!config_only)
    cmd->add_option("--experiment", args.experiment,
                    "Use the bundled config of this experiment instead of --config");
  cmd->add_option("--seed", args.seed, "Seed override");
  cmd->add_option("--out", args.out, "Output file");
}

Model fitted_model(const ExperimentConfig& cfg, const TrainingFit& fit, const DecompositionResult& r) {
  if (model_of(cfg.experiment) == ModelKind::Gmm)
    return GmmModel{r.a, r.weights, *fit.block.consts.sigma2};
  return LdaModel{r.a, cfg.alpha_b, fit.pseudo_length};
}

int cmd_generate(const CommonArgs& args, const std::string& truth_out, int n) {
  const ExperimentConfig cfg = resolve_config(args);
  const std::uint64_t seed = first_seed(args, cfg);
  const Model truth = ground_truth(cfg, seed);
  const fs::path out = output_path(args.out, "");
  save_dataset(out, training_data(cfg, truth, n > 0 ? n : cfg.n_t.front(), seed));
  if (!truth_out.empty()) save_model(truth_out, truth);
  if (cfg.experiment == ExperimentKind::Transfer && !truth_out.empty()) {
    const Eigen::MatrixXd prior = transfer_prior(cfg, std::get<LdaModel>(truth).a, seed);
    save_model(with_suffix(truth_out, "_prior", ".json"),
               LdaModel{prior, cfg.alpha_b, cfg.doc_length});
  }
  return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& data) {
  const ExperimentConfig cfg = resolve_config(args);
  const std::uint64_t seed = first_seed(args, cfg);
  const TrainingFit fit =
      fit_training(load_dataset(data), model_constants(cfg), rtdm_config(cfg, 0.0, 0, seed));
  save_model(output_path(args.out, ""), fitted_model(cfg, fit, fit.a_t));
  return 0;
}

int cmd_regularize(const CommonArgs& args, const std::string& data, const std::string& prior_file,
                   std::optional<double> lambda, std::optional<int> n_p, const std::string& trace) {
  const ExperimentConfig cfg = resolve_config(args);
  const std::uint64_t seed = first_seed(args, cfg);
  std::optional<Eigen::MatrixXd> prior;
  if (!prior_file.empty()) {
    const Model m = load_model(prior_file);
    prior = std::visit([](const auto& x) { return x.a; }, m);
  }
  const Regularizer reg = make_regularizer(cfg, prior ? &*prior : nullptr);
  const int np = n_p.value_or(cfg.n_p.front());
  const RtdmConfig rc = rtdm_config(cfg, lambda.value_or(lambda_grid(cfg, np).front()), np, seed);
  const TrainingFit fit = fit_training(load_dataset(data), model_constants(cfg), rc);
  const RtdmResult r = rtdm_run(fit, reg, rc);
  save_model(output_path(args.out, ""), fitted_model(cfg, fit, r.result));
  if (!trace.empty()) {
    auto f = open_output(trace);
    r.trace.write_csv(f);
  }
  if (r.stop == StopReason::Infeasible)
    std::cerr << "warning: stopped early, " << r.stop_message << "\n";
  else if (!r.converged)
    std::cerr << "warning: stopped after " << r.iterations
              << " iterations without meeting rtdm.epsilon\n";
  return 0;
}

int cmd_eval(const std::string& model_file, const std::string& data, const std::string& out) {
  const Model model = load_model(model_file);
  const double ll = heldout_eval(load_dataset(data), model);
  if (out.empty()) {
    std::cout << format_double(ll) << "\n";
  } else {
    ResultTable t;
    t.add("eval", 0, 0.0, 0, "heldout_loglik", ll);
    auto f = open_output(out);
    t.write_csv(f);
  }
  return 0;
}

int cmd_experiment(const std::string& name, const CommonArgs& args, const std::string& topics_out) {
  const ExperimentKind kind = parse_experiment_kind(name);
  ExperimentConfig cfg = args.config.empty() ? default_config(kind) : load_config(args.config);
  if (cfg.experiment != kind)
    throw ConfigError("field 'experiment' is '" + std::string(to_string(cfg.experiment)) +
                      "' but the command asked for '" + name + "'");
  if (args.seed) cfg.seeds = {*args.seed};
  const fs::path out = output_path(args.out, cfg.output);
  std::vector<TopicEntry> topics;
  const ResultTable table = run_experiment(cfg, kind == ExperimentKind::Mesh ? &topics : nullptr);
  {
    auto f = open_output(out);
    table.write_csv(f);
  }
  if (kind == ExperimentKind::Mesh) {
    auto f = open_output(topics_out.empty() ? with_suffix(out, "_topics", ".csv") : fs::path(topics_out));
    write_topic_table(f, topics);
  }
  return 0;
}

int cmd_generate_tree(int n, int roots, int max_children, std::uint64_t seed, const std::string& out) {
  const HeadingTree tree = synthetic_heading_tree(n, roots, max_children, seed);
  auto f = open_output(output_path(out, ""));
  tree.write(f);
  return 0;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const InsufficientLengthError*>(&e))
    return kExitConfig;
  if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const RankDeficiencyError*>(&e) ||
      dynamic_cast<const DomainError*>(&e) || dynamic_cast<const DegenerateDataError*>(&e))
    return kExitNumeric;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized spectral inference for Gaussian mixtures and LDA"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string data, truth_out, prior_file, trace, model_file, topics_out, name;
  std::optional<double> lambda;
  std::optional<int> n_p;
  int n = 0, roots = 6, max_children = 8;
  std::uint64_t tree_seed = 1;

  auto* gen = app.add_subcommand("generate", "Sample synthetic training data from an experiment's generator");
  add_common(gen, common);
  gen->add_option("--truth-out", truth_out, "Also write the generating model (JSON)");
  gen->add_option("-n,--count", n, "Number of observations (default: first model.n_t)");

  auto* fit = app.add_subcommand("fit", "Unregularized tensor decomposition");
  add_common(fit, common);
  fit->add_option("--data", data, "Training data CSV")->required();

  auto* regz = app.add_subcommand("regularize", "Pseudo-data regularized decomposition");
  add_common(regz, common);
  regz->add_option("--data", data, "Training data CSV")->required();
  regz->add_option("--prior", prior_file, "Prior model JSON (transfer regularizer)");
  regz->add_option("--lambda", lambda, "Regularization weight (default: first rtdm.lambda)");
  regz->add_option("--n-p", n_p, "Pseudo-observation count (default: first rtdm.n_p)");
  regz->add_option("--trace", trace, "Per-iteration trace CSV");

  auto* ev = app.add_subcommand("eval", "Held-out log-likelihood of a model");
  ev->add_option("--model", model_file, "Model JSON")->required();
  ev->add_option("--data", data, "Held-out data CSV")->required();
  ev->add_option("--out", common.out, "Write a result table instead of printing");

  auto* exp = app.add_subcommand("experiment", "Run one of the bundled experiments");
  exp->add_option("name", name, "gauss_prior | transfer | anticorr | mesh | sparsity")->required();
  add_common(exp, common, true);
  exp->add_option("--topics-out", topics_out, "Top-heading table CSV (mesh)");

  auto* gt = app.add_subcommand("generate-tree", "Write a synthetic heading tree");
  gt->add_option("-n,--count", n, "Number of headings")->required();
  gt->add_option("--roots", roots, "Number of top-level headings");
  gt->add_option("--max-children", max_children, "Children per heading");
  gt->add_option("--seed", tree_seed, "Seed");
  gt->add_option("--out", common.out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(common, truth_out, n);
    if (*fit) return cmd_fit(common, data);
    if (*regz) return cmd_regularize(common, data, prior_file, lambda, n_p, trace);
    if (*ev) return cmd_eval(model_file, data, common.out);
    if (*exp) return cmd_experiment(name, common, topics_out);
    if (*gt) return cmd_generate_tree(n, roots, max_children, tree_seed, common.out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return 1;
}
