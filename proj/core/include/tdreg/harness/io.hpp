#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include <Eigen/Dense>

#include "tdreg/models.hpp"

namespace tdreg::harness {

// Datasets are CSV with one observation per row and a header x0..x{D-1}.
void write_dataset(std::ostream& out, const Eigen::MatrixXd& x);
Eigen::MatrixXd read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Eigen::MatrixXd& x);
Eigen::MatrixXd load_dataset(const std::filesystem::path& path);

// Model parameters as JSON: {"model": "gmm"|"lda", "a": [[column], ...], ...}.
std::string model_to_json(const Model& model);
Model model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

/// Creates parent directories as needed; throws ConfigError when the file
/// cannot be opened.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace tdreg::harness
