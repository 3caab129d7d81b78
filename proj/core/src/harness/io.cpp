#include "tdreg/harness/io.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tdreg/errors.hpp"
#include "tdreg/harness/result_table.hpp"

namespace tdreg::harness {

using nlohmann::json;

void write_dataset(std::ostream& out, const Eigen::MatrixXd& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) out << (i ? "," : "") << 'x' << i;
  out << '\n';
  for (Eigen::Index n = 0; n < x.cols(); ++n) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) out << (i ? "," : "") << format_double(x(i, n));
    out << '\n';
  }
}

Eigen::MatrixXd read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset: empty file", 1);
  const auto d = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  std::vector<double> values;
  int lineno = 1;
  Eigen::Index n = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    Eigen::Index count = 0;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::logic_error&) {
        throw ParseError("dataset: malformed number '" + cell + "'", lineno);
      }
      ++count;
    }
    if (count != d) throw ParseError("dataset: expected " + std::to_string(d) + " columns", lineno);
    ++n;
  }
  return Eigen::Map<const Eigen::MatrixXd>(values.data(), d, n);
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file '" + path.string() + "'");
  return out;
}

void save_dataset(const std::filesystem::path& path, const Eigen::MatrixXd& x) {
  auto out = open_output(path);
  write_dataset(out, x);
}

Eigen::MatrixXd load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in);
}

namespace {

json matrix_columns(const Eigen::MatrixXd& a) {
  json cols = json::array();
  for (Eigen::Index k = 0; k < a.cols(); ++k)
    cols.push_back(std::vector<double>(a.col(k).data(), a.col(k).data() + a.rows()));
  return cols;
}

Eigen::MatrixXd columns_matrix(const json& cols) {
  const auto k = static_cast<Eigen::Index>(cols.size());
  if (k == 0) throw ConfigError("params: 'a' must have at least one column");
  const auto d = static_cast<Eigen::Index>(cols.at(0).size());
  Eigen::MatrixXd a(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto col = cols.at(static_cast<std::size_t>(j)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(col.size()) != d)
      throw ConfigError("params: columns of 'a' differ in length");
    a.col(j) = Eigen::Map<const Eigen::VectorXd>(col.data(), d);
  }
  return a;
}

}  // namespace

std::string model_to_json(const Model& model) {
  json j;
  if (const auto* g = std::get_if<GmmModel>(&model)) {
    j["model"] = "gmm";
    j["a"] = matrix_columns(g->a);
    j["weights"] = std::vector<double>(g->weights.data(), g->weights.data() + g->weights.size());
    j["sigma2"] = g->sigma2;
  } else {
    const auto& l = std::get<LdaModel>(model);
    j["model"] = "lda";
    j["a"] = matrix_columns(l.a);
    j["alpha_b"] = l.alpha_b;
    j["doc_length"] = l.doc_length;
    j["likelihood"] = to_string(l.surrogate);
  }
  return j.dump(2) + "\n";
}

Model model_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    const std::string kind = j.at("model").get<std::string>();
    if (kind == "gmm") {
      const auto w = j.at("weights").get<std::vector<double>>();
      GmmModel g{columns_matrix(j.at("a")), Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                 j.at("sigma2").get<double>()};
      validate(g);
      return g;
    }
    if (kind == "lda") {
      LdaModel l{columns_matrix(j.at("a")), j.at("alpha_b").get<double>(),
                 j.at("doc_length").get<int>()};
      if (j.contains("likelihood")) l.surrogate = parse_lda_surrogate(j.at("likelihood").get<std::string>());
      validate(l);
      return l;
    }
    throw ConfigError("params: unknown model '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("params: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("params: ") + e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& model) {
  auto out = open_output(path);
  out << model_to_json(model);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open params file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return model_from_json(text.str());
}

}  // namespace tdreg::harness
