#include <gtest/gtest.h>

#include <queue>
#include <random>
#include <sstream>

#include "tdreg/errors.hpp"
#include "tdreg/heading_tree.hpp"

namespace tdreg {
namespace {

HeadingTree parse(const std::string& text) {
  std::istringstream in(text);
  return HeadingTree::parse(in);
}

TEST(HeadingTree, ParentChildAndGrandchild) {
  const HeadingTree tree = parse(
      "# ages\n"
      "Adult [M01.060.116]\n"
      "Aged [M01.060.116.100]\n"
      "\n"
      "Aged, 80 and over [M01.060.116.100.080]\n");
  ASSERT_EQ(tree.size(), 3u);
  EXPECT_EQ(tree.headings()[2].name, "Aged, 80 and over");
  EXPECT_EQ(tree.distance(0, 1), 1);
  EXPECT_EQ(tree.distance(0, 2), 2);
  EXPECT_EQ(tree.distance(1, 1), 0);
}

TEST(HeadingTree, DisjointTopLevelCodesMeetAtVirtualRoot) {
  const HeadingTree tree = parse("A [C01]\nB [D02.100]\n");
  EXPECT_EQ(tree.distance(0, 1), 3);
}

TEST(HeadingTree, MalformedLineReportsLineNumber) {
  try {
    parse("Adult [M01.060]\nBroken line without code\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse("X [M01..2]\n"), ParseError);
  EXPECT_THROW(parse("X [M01]\nY [M01]\n"), ParseError);
}

TEST(HeadingTree, WriteRoundTrips) {
  const HeadingTree tree = parse("Adult [M01.060.116]\nAged [M01.060.116.100]\n");
  std::ostringstream out;
  tree.write(out);
  const HeadingTree again = parse(out.str());
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again.headings()[1].code, "M01.060.116.100");
}

TEST(HeadingTree, MissingFileIsConfigError) {
  EXPECT_THROW(HeadingTree::load("/nonexistent/tree.txt"), ConfigError);
}

// Random prefix tree of 50 codes; distances against BFS over explicit edges.
TEST(TreeDistance, MatchesBreadthFirstSearch) {
  std::mt19937_64 rng(5);
  std::vector<std::string> codes;
  std::vector<int> parent;  // -1 is the virtual root
  for (int i = 0; i < 50; ++i) {
    std::uniform_int_distribution<int> pick(-1, i - 1);
    const int p = i == 0 ? -1 : pick(rng);
    char seg[8];
    std::snprintf(seg, sizeof seg, "%03d", i);
    codes.push_back(p < 0 ? std::string("T") + seg : codes[static_cast<std::size_t>(p)] + "." + seg);
    parent.push_back(p);
  }
  std::string text;
  for (int i = 0; i < 50; ++i) text += "h" + std::to_string(i) + " [" + codes[static_cast<std::size_t>(i)] + "]\n";
  const TreeDistances td = build_tree_distance(parse(text));

  // Node 50 is the virtual root.
  std::vector<std::vector<int>> adj(51);
  for (int i = 0; i < 50; ++i) {
    const int p = parent[static_cast<std::size_t>(i)] < 0 ? 50 : parent[static_cast<std::size_t>(i)];
    adj[static_cast<std::size_t>(i)].push_back(p);
    adj[static_cast<std::size_t>(p)].push_back(i);
  }
  for (int s = 0; s < 50; ++s) {
    std::vector<int> dist(51, -1);
    std::queue<int> q;
    dist[static_cast<std::size_t>(s)] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[static_cast<std::size_t>(u)])
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push(v);
        }
    }
    for (int t = 0; t < 50; ++t) {
      EXPECT_EQ(td.o(s, t), dist[static_cast<std::size_t>(t)]);
      if (s != t) EXPECT_DOUBLE_EQ(td.o_star(s, t), 1.0 / dist[static_cast<std::size_t>(t)]);
    }
    EXPECT_EQ(td.o_star(s, s), 1.0);
  }
}

}  // namespace
}  // namespace tdreg
