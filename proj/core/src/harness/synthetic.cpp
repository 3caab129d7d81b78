#include "tdreg/harness/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <random>

#include "tdreg/decomposition.hpp"
#include "tdreg/errors.hpp"

namespace tdreg::harness {

Eigen::MatrixXd gaussian_means(int d, int k, double variance, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  Eigen::MatrixXd a(d, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < d; ++i) a(i, j) = normal(rng);
  return a;
}

Eigen::MatrixXd dirichlet_topics(int d, int k, double concentration, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Eigen::MatrixXd a(d, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < d; ++i) a(i, j) = gamma(rng);
    a.col(j) /= a.col(j).sum();
  }
  return a;
}

Eigen::MatrixXd perturbed_topics(const Eigen::MatrixXd& a, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale / static_cast<double>(a.rows()));
  Eigen::MatrixXd out(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    Eigen::VectorXd col = a.col(j);
    for (Eigen::Index i = 0; i < a.rows(); ++i) col(i) += normal(rng);
    out.col(j) = project_to_simplex(col);
  }
  return out;
}

Eigen::MatrixXd tree_local_topics(const Eigen::MatrixXd& tree_distance, int k, double locality,
                                  std::uint64_t seed) {
  const Eigen::Index d = tree_distance.rows();
  if (k > d) throw ConfigError("tree_local_topics: more topics than headings");
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  Eigen::MatrixXd a(d, k);
  for (int j = 0; j < k; ++j) {
    const Eigen::Index c = idx[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < d; ++i)
      a(i, j) = jitter(rng) * std::exp(-tree_distance(c, i) / locality) + 1e-3;
    a.col(j) /= a.col(j).sum();
  }
  return a;
}

Eigen::MatrixXd add_poisson_noise(const Eigen::MatrixXd& counts, double rate, std::uint64_t seed) {
  if (rate <= 0.0) return counts;
  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> poisson(rate);
  Eigen::MatrixXd out = counts;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) += poisson(rng);
  return out;
}

Eigen::MatrixXd drop_short_documents(const Eigen::MatrixXd& docs) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < docs.cols(); ++j)
    if (docs.col(j).sum() >= 3.0) keep.push_back(j);
  Eigen::MatrixXd out(docs.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = docs.col(keep[j]);
  return out;
}

Eigen::VectorXi column_support(const Eigen::MatrixXd& a, double threshold) {
  return (a.array() > threshold).cast<int>().colwise().sum().transpose();
}

HeadingTree synthetic_heading_tree(int n, int roots, int max_children, std::uint64_t seed) {
  if (n < 1 || roots < 1 || max_children < 1)
    throw ConfigError("synthetic_heading_tree: sizes must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_children(1, max_children);
  std::vector<Heading> headings;
  std::deque<std::size_t> frontier;
  char buf[64];
  for (int r = 0; r < roots && static_cast<int>(headings.size()) < n; ++r) {
    std::snprintf(buf, sizeof buf, "%c%02d", 'A' + r % 26, r / 26 + 1);
    Heading h;
    h.code = buf;
    h.segments = {h.code};
    headings.push_back(h);
    frontier.push_back(headings.size() - 1);
  }
  while (static_cast<int>(headings.size()) < n && !frontier.empty()) {
    const std::size_t parent = frontier.front();
    frontier.pop_front();
    const int c = n_children(rng);
    for (int i = 0; i < c && static_cast<int>(headings.size()) < n; ++i) {
      Heading h;
      std::snprintf(buf, sizeof buf, "%03d", (i + 1) * 10 + static_cast<int>(rng() % 10));
      h.code = headings[parent].code + "." + buf;
      // Codes must stay unique; bump the segment on the rare collision.
      while (std::any_of(headings.begin(), headings.end(),
                         [&](const Heading& o) { return o.code == h.code; }))
        h.code += "0";
      h.segments = split_code(h.code);
      headings.push_back(h);
      frontier.push_back(headings.size() - 1);
    }
  }
  for (std::size_t i = 0; i < headings.size(); ++i) {
    std::snprintf(buf, sizeof buf, "Heading %03zu", i + 1);
    headings[i].name = buf;
  }
  return HeadingTree(std::move(headings));
}

}  // namespace tdreg::harness
