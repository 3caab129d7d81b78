#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdreg/heading_tree.hpp"

namespace tdreg::harness {

struct TopicEntry {
  std::string setting;  // e.g. "tdm" or "rtdm n_p=100 lambda=1000"
  int topic = 0;
  int rank = 0;
  std::string heading;
  std::string code;
  double weight = 0.0;
};

/// Top-`top` headings per topic column.
std::vector<TopicEntry> top_headings(const Eigen::MatrixXd& a, const HeadingTree& tree,
                                     const std::string& setting, int top = 8);

void write_topic_table(std::ostream& out, const std::vector<TopicEntry>& entries);
std::vector<TopicEntry> read_topic_table(std::istream& in);

bool operator==(const TopicEntry& a, const TopicEntry& b);

}  // namespace tdreg::harness
