#pragma once

// Brute-force and closed-form references shared by unit and acceptance tests.

#include <cstdint>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "tdreg/heading_tree.hpp"
#include "tdreg/moments.hpp"
#include "tdreg/tensor3.hpp"
#include "test_support.hpp"

namespace tdreg::testing {

// Average of e_{w1}⊗e_{w2}(⊗e_{w3}) over ordered tuples of distinct positions.
inline DocStatistics enumerate_positions(const Eigen::VectorXi& counts) {
  std::vector<int> words;
  for (int d = 0; d < counts.size(); ++d)
    for (int r = 0; r < counts(d); ++r) words.push_back(d);
  const auto ell = static_cast<int>(words.size());
  const auto dim = counts.size();
  DocStatistics s;
  s.first = counts.cast<double>() / ell;
  s.pairs = Eigen::MatrixXd::Zero(dim, dim);
  Tensor3 t(dim);
  long n_pairs = 0, n_triples = 0;
  for (int p = 0; p < ell; ++p)
    for (int q = 0; q < ell; ++q) {
      if (p == q) continue;
      s.pairs(words[p], words[q]) += 1.0;
      ++n_pairs;
      for (int r = 0; r < ell; ++r) {
        if (r == p || r == q) continue;
        t(words[p], words[q], words[r]) += 1.0;
        ++n_triples;
      }
    }
  s.pairs /= static_cast<double>(n_pairs);
  t *= 1.0 / static_cast<double>(n_triples);
  s.triples = t;
  return s;
}

// Exact population moments of the decomposable forms.
inline MomentSet analytic_moments(ModelKind model, const Eigen::MatrixXd& a,
                                  const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma) {
  MomentSet ms;
  ms.model = model;
  ms.m1 = a.rowwise().mean();
  ms.m2 = Eigen::MatrixXd::Zero(a.rows(), a.rows());
  Tensor3 t(a.rows());
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    ms.m2 += beta(k) * a.col(k) * a.col(k).transpose();
    t.add_cube(gamma(k), a.col(k));
  }
  ms.m3 = t;
  ms.n = 1;
  return ms;
}

inline Eigen::VectorXd random_weights(int k, std::uint64_t seed) {
  Eigen::VectorXd w = random_matrix(k, 1, seed).cwiseAbs().array() + 0.3;
  return w / w.sum();
}

inline TreeDistances random_tree_distances(int d, std::uint64_t seed) {
  std::istringstream in(random_tree_text(d, seed));
  return build_tree_distance(HeadingTree::parse(in));
}

}  // namespace tdreg::testing
