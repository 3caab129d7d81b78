#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tdreg {

/// A heading and its dotted tree code, e.g. "Aged [M01.060.116.100]".
struct Heading {
  std::string name;
  std::string code;
  std::vector<std::string> segments;
};

/// Headings placed on a code-prefix tree. Every code segment is a node, the
/// parent of a code drops its last segment, and a virtual root joins the
/// top-level codes.
///
/// Text format: one `Name [code.seg.ments]` per line; blank lines and lines
/// starting with '#' are skipped.
class HeadingTree {
 public:
  HeadingTree() = default;
  explicit HeadingTree(std::vector<Heading> headings);

  static HeadingTree parse(std::istream& in);
  static HeadingTree load(const std::filesystem::path& path);

  const std::vector<Heading>& headings() const { return headings_; }
  std::size_t size() const { return headings_.size(); }

  /// Number of edges on the tree path between headings i and j.
  int distance(std::size_t i, std::size_t j) const;

  void write(std::ostream& out) const;

 private:
  std::vector<Heading> headings_;
};

/// O (pairwise path lengths) and O* (O⁻¹ off the diagonal, 1 on it).
struct TreeDistances {
  Eigen::MatrixXd o;
  Eigen::MatrixXd o_star;
};

TreeDistances build_tree_distance(const HeadingTree& tree);

/// Splits and validates a dotted code; throws ParseError (line 0) on failure.
std::vector<std::string> split_code(const std::string& code);

}  // namespace tdreg
