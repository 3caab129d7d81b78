#include "tdreg/heading_tree.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "tdreg/errors.hpp"

namespace tdreg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> split_code(const std::string& code) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : code) {
    if (ch == '.') {
      if (cur.empty()) throw ParseError("empty segment in code '" + code + "'", 0);
      out.push_back(cur);
      cur.clear();
    } else if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    } else {
      throw ParseError("invalid character in code '" + code + "'", 0);
    }
  }
  if (cur.empty()) throw ParseError("empty segment in code '" + code + "'", 0);
  out.push_back(cur);
  return out;
}

HeadingTree::HeadingTree(std::vector<Heading> headings) : headings_(std::move(headings)) {
  std::set<std::string> seen;
  for (auto& h : headings_) {
    if (h.segments.empty()) h.segments = split_code(h.code);
    if (!seen.insert(h.code).second) throw ParseError("duplicate code '" + h.code + "'", 0);
  }
}

HeadingTree HeadingTree::parse(std::istream& in) {
  std::vector<Heading> headings;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto open = t.rfind('[');
    if (t.back() != ']' || open == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected 'Name [code]'", lineno);
    Heading h;
    h.name = trim(t.substr(0, open));
    h.code = trim(t.substr(open + 1, t.size() - open - 2));
    if (h.name.empty())
      throw ParseError("line " + std::to_string(lineno) + ": missing heading name", lineno);
    try {
      h.segments = split_code(h.code);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what(), lineno);
    }
    if (!seen.insert(h.code).second)
      throw ParseError("line " + std::to_string(lineno) + ": duplicate code '" + h.code + "'",
                       lineno);
    headings.push_back(std::move(h));
  }
  HeadingTree tree;
  tree.headings_ = std::move(headings);
  return tree;
}

HeadingTree HeadingTree::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open heading tree file '" + path.string() + "'");
  return parse(in);
}

int HeadingTree::distance(std::size_t i, std::size_t j) const {
  const auto& a = headings_.at(i).segments;
  const auto& b = headings_.at(j).segments;
  std::size_t common = 0;
  while (common < a.size() && common < b.size() && a[common] == b[common]) ++common;
  return static_cast<int>(a.size() + b.size() - 2 * common);
}

void HeadingTree::write(std::ostream& out) const {
  for (const auto& h : headings_) out << h.name << " [" << h.code << "]\n";
}

TreeDistances build_tree_distance(const HeadingTree& tree) {
  const auto d = static_cast<Eigen::Index>(tree.size());
  TreeDistances out;
  out.o = Eigen::MatrixXd::Zero(d, d);
  out.o_star = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double dist =
          tree.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      out.o(i, j) = out.o(j, i) = dist;
      out.o_star(i, j) = out.o_star(j, i) = 1.0 / dist;
    }
  }
  return out;
}

}  // namespace tdreg
