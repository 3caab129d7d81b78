#include "tdreg/harness/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tdreg/errors.hpp"

namespace tdreg::harness {

namespace {

#include "default_configs.inc"

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
  for (const auto& [key, _] : obj.items())
    if (!known.contains(key)) throw ConfigError("unknown field '" + where + key + "'");
}

template <typename T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + key + "' has the wrong type");
  }
}

template <typename T>
void read_list(const json& obj, const std::string& where, const char* key, std::vector<T>& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  try {
    out = v.is_array() ? v.get<std::vector<T>>() : std::vector<T>{v.get<T>()};
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + key + "' has the wrong type");
  }
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("field '" + field + "' " + what);
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::GaussPrior: return "gauss_prior";
    case ExperimentKind::Transfer: return "transfer";
    case ExperimentKind::AntiCorr: return "anticorr";
    case ExperimentKind::Mesh: return "mesh";
    case ExperimentKind::Sparsity: return "sparsity";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::GaussPrior, ExperimentKind::Transfer, ExperimentKind::AntiCorr,
                 ExperimentKind::Mesh, ExperimentKind::Sparsity})
    if (name == to_string(k)) return k;
  throw ConfigError("unknown experiment '" + std::string(name) +
                    "' (expected gauss_prior, transfer, anticorr, mesh or sparsity)");
}

ModelKind model_of(ExperimentKind kind) {
  return kind == ExperimentKind::GaussPrior ? ModelKind::Gmm : ModelKind::Lda;
}

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(root, "", {"experiment", "model", "rtdm", "power", "seeds", "output", "description"});

  ExperimentConfig cfg;
  require(root.contains("experiment"), "experiment", "is required");
  std::string name;
  read(root, "", "experiment", name);
  cfg.experiment = parse_experiment_kind(name);

  require(root.contains("model") && root.at("model").is_object(), "model", "is required");
  const json& m = root.at("model");
  reject_unknown(m, "model.",
                 {"d", "k", "n_t", "n_test", "sigma_m2", "sigma2", "alpha_b", "doc_length",
                  "topic_concentration", "prior_perturbation", "noise_rate", "alpha_a",
                  "topic_locality", "tree_file", "known_sigma2", "sparsity_floor"});
  read(m, "model.", "d", cfg.d);
  read(m, "model.", "k", cfg.k);
  read_list(m, "model.", "n_t", cfg.n_t);
  read(m, "model.", "n_test", cfg.n_test);
  read(m, "model.", "sigma_m2", cfg.sigma_m2);
  read(m, "model.", "sigma2", cfg.sigma2);
  read(m, "model.", "alpha_b", cfg.alpha_b);
  read(m, "model.", "doc_length", cfg.doc_length);
  read(m, "model.", "topic_concentration", cfg.topic_concentration);
  read(m, "model.", "prior_perturbation", cfg.prior_perturbation);
  read(m, "model.", "noise_rate", cfg.noise_rate);
  read(m, "model.", "alpha_a", cfg.alpha_a);
  read(m, "model.", "sparsity_floor", cfg.sparsity_floor);
  read(m, "model.", "topic_locality", cfg.topic_locality);
  read(m, "model.", "tree_file", cfg.tree_file);
  read(m, "model.", "known_sigma2", cfg.known_sigma2);
  if (!cfg.tree_file.empty() && std::filesystem::path(cfg.tree_file).is_relative() &&
      !base_dir.empty())
    cfg.tree_file = (base_dir / cfg.tree_file).lexically_normal().string();

  if (root.contains("rtdm")) {
    const json& r = root.at("rtdm");
    require(r.is_object(), "rtdm", "must be an object");
    reject_unknown(r, "rtdm.",
                   {"n_p", "lambda", "lambda_per_np", "step_size", "beta1", "beta2", "adam_epsilon", "epsilon",
                    "max_iters", "gradient_mode", "pseudo_doc_length", "pseudo_count_smoothing",
                    "lda_likelihood"});
    read_list(r, "rtdm.", "n_p", cfg.n_p);
    read_list(r, "rtdm.", "lambda", cfg.lambda);
    read_list(r, "rtdm.", "lambda_per_np", cfg.lambda_per_np);
    require(cfg.lambda.empty() || cfg.lambda_per_np.empty(), "rtdm.lambda_per_np",
            "cannot be combined with rtdm.lambda");
    OptimizerSettings& o = cfg.optimizer;
    read(r, "rtdm.", "step_size", o.adam.step_size);
    read(r, "rtdm.", "beta1", o.adam.beta1);
    read(r, "rtdm.", "beta2", o.adam.beta2);
    read(r, "rtdm.", "adam_epsilon", o.adam.epsilon);
    read(r, "rtdm.", "epsilon", o.epsilon);
    read(r, "rtdm.", "max_iters", o.max_iters);
    read(r, "rtdm.", "pseudo_doc_length", o.pseudo_doc_length);
    read(r, "rtdm.", "pseudo_count_smoothing", o.pseudo_count_smoothing);
    std::string surrogate(to_string(o.lda_likelihood));
    read(r, "rtdm.", "lda_likelihood", surrogate);
    try {
      o.lda_likelihood = parse_lda_surrogate(surrogate);
    } catch (const ConfigError&) {
      throw ConfigError("field 'rtdm.lda_likelihood' must be 'multinomial', 'linear' or 'mixture'");
    }
    std::string mode = "adjoint";
    read(r, "rtdm.", "gradient_mode", mode);
    if (mode == "adjoint")
      o.gradient_mode = GradientMode::Adjoint;
    else if (mode == "finite_difference")
      o.gradient_mode = GradientMode::FiniteDifference;
    else
      throw ConfigError("field 'rtdm.gradient_mode' must be 'adjoint' or 'finite_difference'");
  }
  if (root.contains("power")) {
    const json& p = root.at("power");
    require(p.is_object(), "power", "must be an object");
    reject_unknown(p, "power.", {"restarts", "iters", "polish"});
    read(p, "power.", "restarts", cfg.power.restarts);
    read(p, "power.", "iters", cfg.power.iters);
    read(p, "power.", "polish", cfg.power.polish);
  }
  read_list(root, "", "seeds", cfg.seeds);
  read(root, "", "output", cfg.output);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

void validate(const ExperimentConfig& cfg) {
  require(cfg.d > 0, "model.d", "must be positive");
  require(cfg.k > 0, "model.k", "must be positive");
  require(cfg.k <= cfg.d, "model.k", "must not exceed model.d");
  require(!cfg.n_t.empty(), "model.n_t", "must be non-empty");
  for (int n : cfg.n_t) require(n >= cfg.k, "model.n_t", "entries must be at least model.k");
  require(cfg.n_test >= 0, "model.n_test", "must be nonnegative");
  require(cfg.sigma_m2 > 0.0, "model.sigma_m2", "must be positive");
  require(cfg.sigma2 > 0.0, "model.sigma2", "must be positive");
  require(cfg.alpha_b > 0.0, "model.alpha_b", "must be positive");
  require(cfg.doc_length >= 3, "model.doc_length", "must be at least 3");
  require(cfg.topic_concentration > 0.0, "model.topic_concentration", "must be positive");
  require(cfg.prior_perturbation >= 0.0, "model.prior_perturbation", "must be nonnegative");
  require(cfg.noise_rate >= 0.0, "model.noise_rate", "must be nonnegative");
  require(cfg.alpha_a > 0.0, "model.alpha_a", "must be positive");
  require(cfg.sparsity_floor > 0.0 && cfg.sparsity_floor < 1.0, "model.sparsity_floor",
          "must lie in (0, 1)");
  require(cfg.topic_locality > 0.0, "model.topic_locality", "must be positive");
  if (cfg.experiment == ExperimentKind::Mesh) {
    require(!cfg.tree_file.empty(), "model.tree_file", "is required for the mesh experiment");
    require(std::filesystem::exists(cfg.tree_file), "model.tree_file",
            "names a file that does not exist: " + cfg.tree_file);
  }
  require(!cfg.n_p.empty(), "rtdm.n_p", "must be non-empty");
  for (int n : cfg.n_p) require(n > 0, "rtdm.n_p", "entries must be positive");
  require(!cfg.lambda.empty() || !cfg.lambda_per_np.empty(), "rtdm.lambda", "must be non-empty");
  for (double l : cfg.lambda) require(l >= 0.0, "rtdm.lambda", "entries must be nonnegative");
  for (double l : cfg.lambda_per_np)
    require(l >= 0.0, "rtdm.lambda_per_np", "entries must be nonnegative");
  require(!cfg.seeds.empty(), "seeds", "must be non-empty");
  require(cfg.optimizer.adam.step_size > 0.0, "rtdm.step_size", "must be positive");
  require(cfg.optimizer.epsilon > 0.0, "rtdm.epsilon", "must be positive");
  require(cfg.optimizer.max_iters >= 1, "rtdm.max_iters", "must be at least 1");
  require(cfg.power.restarts >= 1, "power.restarts", "must be at least 1");
  require(cfg.power.iters >= 1, "power.iters", "must be at least 1");
  require(cfg.power.polish >= 0, "power.polish", "must be nonnegative");
}

ExperimentConfig default_config(ExperimentKind kind) {
  if (const char* env = std::getenv("TDREG_CONFIG_DIR"); env && *env) {
    const auto path = std::filesystem::path(env) / (std::string(to_string(kind)) + ".json");
    if (std::filesystem::exists(path)) return load_config(path);
  }
  const std::filesystem::path dir = kDefaultConfigDir;
  for (const auto& [name, text] : kDefaultConfigs)
    if (name == to_string(kind)) return parse_config(text, dir);
  throw ConfigError("no bundled config for experiment '" + std::string(to_string(kind)) + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> lambda_grid(const ExperimentConfig& cfg, int n_p) {
  if (cfg.lambda_per_np.empty()) return cfg.lambda;
  std::vector<double> out;
  for (double r : cfg.lambda_per_np) out.push_back(r * n_p);
  return out;
}

RtdmConfig rtdm_config(const ExperimentConfig& cfg, double lambda, int n_p, std::uint64_t seed) {
  RtdmConfig r;
  r.lambda = lambda;
  r.n_p = n_p;
  r.epsilon = cfg.optimizer.epsilon;
  r.max_iters = cfg.optimizer.max_iters;
  r.adam = cfg.optimizer.adam;
  r.gradient_mode = cfg.optimizer.gradient_mode;
  r.pseudo_doc_length = cfg.optimizer.pseudo_doc_length;
  r.pseudo_count_smoothing = cfg.optimizer.pseudo_count_smoothing;
  r.lda_surrogate = cfg.optimizer.lda_likelihood;
  r.seed = derive_seed(seed, 101);
  r.tdm.power = cfg.power;
  r.tdm.power.seed = derive_seed(seed, 102);
  return r;
}

}  // namespace tdreg::harness
