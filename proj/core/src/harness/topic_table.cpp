#include "tdreg/harness/topic_table.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "tdreg/errors.hpp"
#include "tdreg/harness/result_table.hpp"

namespace tdreg::harness {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::vector<std::string> split_quoted(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted && c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
      cur += '"';
      ++i;
    } else if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::vector<TopicEntry> top_headings(const Eigen::MatrixXd& a, const HeadingTree& tree,
                                     const std::string& setting, int top) {
  if (static_cast<std::size_t>(a.rows()) != tree.size())
    throw ShapeError("top_headings: topic dimension differs from the tree size");
  std::vector<TopicEntry> out;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    std::iota(idx.begin(), idx.end(), 0);
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(top), idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                      [&](Eigen::Index x, Eigen::Index y) {
                        return a(x, k) > a(y, k) || (a(x, k) == a(y, k) && x < y);
                      });
    for (std::size_t r = 0; r < n; ++r) {
      const Heading& h = tree.headings()[static_cast<std::size_t>(idx[r])];
      out.push_back({setting, static_cast<int>(k), static_cast<int>(r) + 1, h.name, h.code,
                     a(idx[r], k)});
    }
  }
  return out;
}

void write_topic_table(std::ostream& out, const std::vector<TopicEntry>& entries) {
  out << "setting,topic,rank,heading,code,weight\n";
  for (const auto& e : entries)
    out << quote(e.setting) << ',' << e.topic << ',' << e.rank << ',' << quote(e.heading) << ','
        << e.code << ',' << format_double(e.weight) << '\n';
}

std::vector<TopicEntry> read_topic_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "setting,topic,rank,heading,code,weight")
    throw ParseError("topic table: missing or wrong header", 1);
  std::vector<TopicEntry> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_quoted(line);
    if (f.size() != 6) throw ParseError("topic table: expected 6 fields", lineno);
    try {
      out.push_back({f[0], std::stoi(f[1]), std::stoi(f[2]), f[3], f[4], std::stod(f[5])});
    } catch (const std::logic_error&) {
      throw ParseError("topic table: malformed number", lineno);
    }
  }
  return out;
}

bool operator==(const TopicEntry& a, const TopicEntry& b) {
  return a.setting == b.setting && a.topic == b.topic && a.rank == b.rank &&
         a.heading == b.heading && a.code == b.code && a.weight == b.weight;
}

}  // namespace tdreg::harness
