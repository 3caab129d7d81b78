#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "tdreg/heading_tree.hpp"

namespace tdreg::harness {

/// D×K matrix with i.i.d. N(0, variance) entries.
Eigen::MatrixXd gaussian_means(int d, int k, double variance, std::uint64_t seed);

/// Topics drawn from a symmetric Dirichlet, entries floored away from zero.
Eigen::MatrixXd dirichlet_topics(int d, int k, double concentration, std::uint64_t seed);

/// A nearby topic matrix: each column perturbed by Gaussian noise of
/// standard deviation scale/D and projected back onto the simplex.
Eigen::MatrixXd perturbed_topics(const Eigen::MatrixXd& a, double scale, std::uint64_t seed);

/// Topics concentrated on tree neighbourhoods: topic k puts weight
/// ∝ exp(−O(c_k, i)/locality) on heading i around a random centre c_k.
Eigen::MatrixXd tree_local_topics(const Eigen::MatrixXd& tree_distance, int k, double locality,
                                  std::uint64_t seed);

/// Adds independent Poisson(rate) counts to every entry.
Eigen::MatrixXd add_poisson_noise(const Eigen::MatrixXd& counts, double rate, std::uint64_t seed);

/// Drops documents shorter than three words (the moment estimators need them).
Eigen::MatrixXd drop_short_documents(const Eigen::MatrixXd& docs);

/// Number of entries above `threshold`, per column.
Eigen::VectorXi column_support(const Eigen::MatrixXd& a, double threshold);

/// A synthetic heading tree: `roots` top-level codes, each node having up to
/// `max_children` children, `n` headings in total.
HeadingTree synthetic_heading_tree(int n, int roots, int max_children, std::uint64_t seed);

}  // namespace tdreg::harness
