#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "oracles/graph_oracles.hpp"
#include "spatialnav/topology.hpp"

using namespace spatialnav;

namespace {

oracle::Edges raw_edges(const TopologyMap& m) {
  oracle::Edges e;
  for (const auto& [a, b] : m.edges()) e.emplace_back(a, b);
  return e;
}

std::vector<TopologyDescriptor> bounded_suite() {
  std::vector<TopologyDescriptor> out;
  for (int r = 1; r <= 6; ++r)
    for (int c = 1; c <= 6; ++c) {
      if (r * c < 2) continue;
      out.push_back(TopologyDescriptor::square(r, c));
      out.push_back(TopologyDescriptor::rhombus(r, c));
    }
  for (int s = 1; s <= 3; ++s) out.push_back(TopologyDescriptor::hexagon(s));
  for (int s = 1; s <= 5; ++s) out.push_back(TopologyDescriptor::triangle(s));
  for (int n = 3; n <= 24; ++n) out.push_back(TopologyDescriptor::ring(n));
  for (int n = 2; n <= 12; ++n)
    for (std::uint64_t seed = 1; seed <= 3; ++seed) out.push_back(TopologyDescriptor::tree(n, seed));
  return out;
}

}  // namespace

TEST(Topology, SpecCounts) {
  const auto sq = build_topology(TopologyDescriptor::square(3, 3));
  EXPECT_EQ(sq.node_count(), 9u);
  EXPECT_EQ(sq.edge_count(), 12u);
  EXPECT_EQ(girth(sq), 4);

  const auto ring = build_topology(TopologyDescriptor::ring(12));
  EXPECT_EQ(ring.node_count(), 12u);
  EXPECT_EQ(ring.edge_count(), 12u);
  for (NodeId i = 0; i < 12; ++i) EXPECT_EQ(ring.neighbors(i).size(), 2u);

  const auto hex = build_topology(TopologyDescriptor::hexagon(2));
  EXPECT_EQ(hex.node_count(), 24u);
  EXPECT_EQ(hex.edge_count(), 30u);

  const auto tri = build_topology(TopologyDescriptor::triangle(3));
  EXPECT_EQ(tri.node_count(), 10u);
  EXPECT_EQ(tri.edge_count(), 18u);
}

TEST(Topology, HexagonMatchesFloatingPointTiling) {
  for (int s = 1; s <= 4; ++s) {
    const auto m = build_topology(TopologyDescriptor::hexagon(s));
    const auto g = oracle::hex_patch_geometry(s);
    ASSERT_EQ(m.node_count(), g.nodes) << "s=" << s;
    ASSERT_EQ(m.edge_count(), g.edges.size()) << "s=" << s;
    EXPECT_EQ(m.node_count(), static_cast<std::size_t>(6 * s * s));
    EXPECT_EQ(oracle::degree_sequence(g.nodes, g.edges), oracle::degree_sequence(m.node_count(), raw_edges(m)));
    EXPECT_EQ(oracle::distance_spectrum(g.nodes, g.edges), oracle::distance_spectrum(m.node_count(), raw_edges(m)));
  }
}

TEST(Topology, TriangleMatchesLatticeEnumeration) {
  for (int s = 1; s <= 5; ++s) {
    const auto m = build_topology(TopologyDescriptor::triangle(s));
    const auto g = oracle::triangle_geometry(s);
    ASSERT_EQ(m.node_count(), g.nodes);
    ASSERT_EQ(m.edge_count(), g.edges.size());
    EXPECT_EQ(m.node_count(), static_cast<std::size_t>((s + 1) * (s + 2) / 2));
    EXPECT_EQ(oracle::distance_spectrum(g.nodes, g.edges), oracle::distance_spectrum(m.node_count(), raw_edges(m)));
  }
}

TEST(Topology, ShortestDistanceExamples) {
  const auto ring = build_topology(TopologyDescriptor::ring(12));
  EXPECT_EQ(shortest_distance(ring, 0, 7), 5);
  const auto sq = build_topology(TopologyDescriptor::square(3, 3));
  EXPECT_EQ(shortest_distance(sq, 0, 8), 4);
  for (NodeId a = 0; a < sq.node_count(); ++a) EXPECT_EQ(shortest_distance(sq, a, a), 0);
  EXPECT_THROW(shortest_distance(sq, 0, 9), Error);
  try {
    shortest_distance(sq, 42, 0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::lookup);
  }
}

TEST(Topology, NeighborExamples) {
  const auto sq = build_topology(TopologyDescriptor::square(3, 3));
  std::set<Direction> dirs;
  for (const auto& n : sq.neighbors(4)) dirs.insert(n.direction);
  EXPECT_EQ(dirs, (std::set<Direction>{Direction::up, Direction::down, Direction::left, Direction::right}));

  const auto ring = build_topology(TopologyDescriptor::ring(5));
  dirs.clear();
  for (const auto& n : ring.neighbors(0)) dirs.insert(n.direction);
  EXPECT_EQ(dirs, (std::set<Direction>{Direction::clockwise, Direction::counterclockwise}));

  const auto hex = build_topology(TopologyDescriptor::hexagon(1));
  for (NodeId v = 0; v < hex.node_count(); ++v) EXPECT_EQ(hex.neighbors(v).size(), 2u);
  EXPECT_THROW(hex.neighbors(6), Error);
}

TEST(Topology, DirectionOppositeIsInvolution) {
  for (auto d : kAllDirections) {
    EXPECT_EQ(opposite(opposite(d)), d);
    EXPECT_NE(opposite(d), d);
    EXPECT_EQ(parse_direction(to_string(d)), d);
  }
}

TEST(Topology, InvariantsOverBoundedSuite) {
  for (const auto& desc : bounded_suite()) {
    SCOPED_TRACE(desc.tag());
    const auto m = build_topology(desc);
    EXPECT_TRUE(is_connected(m));
    const auto vocab = direction_vocabulary(desc.kind);
    for (NodeId a = 0; a < m.node_count(); ++a) {
      std::set<Direction> labels;
      for (const auto& [d, b] : m.neighbors(a)) {
        EXPECT_NE(a, b) << "self-loop";
        EXPECT_NE(std::find(vocab.begin(), vocab.end(), d), vocab.end());
        if (desc.kind == TopologyKind::tree) {
          // Siblings share the child label; only the parent edge is unique.
          if (d == Direction::parent) {
            EXPECT_TRUE(labels.insert(d).second) << "two parents at node " << a;
          }
          bool back = false;
          for (const auto& n : m.neighbors(b)) back |= n.node == a && n.direction == opposite(d);
          EXPECT_TRUE(back) << "inverse inconsistency";
          continue;
        }
        EXPECT_TRUE(labels.insert(d).second) << "repeated label at node " << a;
        EXPECT_EQ(m.step(b, opposite(d)), a) << "inverse inconsistency";
      }
    }
    std::size_t half_edges = 0;
    for (NodeId a = 0; a < m.node_count(); ++a) half_edges += m.neighbors(a).size();
    EXPECT_EQ(half_edges, 2 * m.edge_count());

    const auto g = girth(m);
    const int brute = oracle::brute_girth(m.node_count(), raw_edges(m));
    switch (desc.kind) {
      case TopologyKind::square:
      case TopologyKind::rhombus:
        if (desc.rows >= 2 && desc.cols >= 2) {
          EXPECT_EQ(g, 4);
        } else {
          EXPECT_FALSE(g.has_value());
        }
        break;
      case TopologyKind::hexagon: EXPECT_EQ(g, 6); break;
      case TopologyKind::triangle: EXPECT_EQ(g, 3); break;
      case TopologyKind::ring: EXPECT_EQ(g, desc.nodes); break;
      case TopologyKind::tree:
        EXPECT_FALSE(g.has_value());
        EXPECT_EQ(m.edge_count() + 1, m.node_count());
        break;
    }
    EXPECT_EQ(g.value_or(oracle::kInf), brute);
  }
}

TEST(Topology, HexagonVertexClasses) {
  const auto m = build_topology(TopologyDescriptor::hexagon(3));
  const std::set<Direction> a{Direction::up, Direction::lower_left, Direction::lower_right};
  const std::set<Direction> b{Direction::down, Direction::upper_left, Direction::upper_right};
  for (NodeId v = 0; v < m.node_count(); ++v) {
    std::set<Direction> dirs;
    for (const auto& n : m.neighbors(v)) dirs.insert(n.direction);
    const bool in_a = std::includes(a.begin(), a.end(), dirs.begin(), dirs.end());
    const bool in_b = std::includes(b.begin(), b.end(), dirs.begin(), dirs.end());
    EXPECT_TRUE(in_a != in_b) << "vertex " << v;
  }
}

TEST(Topology, RhombusIsRotatedSquare) {
  const auto sq = build_topology(TopologyDescriptor::square(3, 4));
  const auto rh = build_topology(TopologyDescriptor::rhombus(3, 4));
  EXPECT_EQ(sq.edges(), rh.edges());
  EXPECT_EQ(rh.step(0, Direction::upper_right), NodeId{1});
  EXPECT_EQ(rh.step(0, Direction::lower_right), NodeId{4});
  EXPECT_EQ(sq.step(0, Direction::right), NodeId{1});
}

TEST(Topology, ShortestDistanceMatchesFloydWarshall) {
  for (const auto& desc : bounded_suite()) {
    const auto m = build_topology(desc);
    if (m.node_count() > 30) continue;
    SCOPED_TRACE(desc.tag());
    const auto fw = oracle::floyd_warshall(m.node_count(), raw_edges(m));
    for (NodeId a = 0; a < m.node_count(); ++a)
      for (NodeId b = 0; b < m.node_count(); ++b) ASSERT_EQ(shortest_distance(m, a, b), fw[a][b]);
  }
}

TEST(Topology, TreeConstraintsAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto t = build_topology(TopologyDescriptor::tree(9, seed));
    ASSERT_EQ(t.node_count(), 9u);
    int max_depth = 0;
    std::vector<std::size_t> parent(9, oracle::npos);
    for (NodeId v = 0; v < 9; ++v) {
      max_depth = std::max(max_depth, t.depth(v));
      if (auto p = t.parent(v)) parent[v] = *p;
    }
    EXPECT_GE(max_depth, 4);
    bool has_cousin = false;
    for (NodeId v = 0; v < 9; ++v) has_cousin |= !oracle::cousins(parent, v).empty();
    EXPECT_TRUE(has_cousin);
    EXPECT_EQ(t.depth(0), 0);
    EXPECT_FALSE(t.parent(0).has_value());
    const auto again = build_topology(TopologyDescriptor::tree(9, seed));
    EXPECT_EQ(t.edges(), again.edges());
  }
}

TEST(Topology, DescriptorErrors) {
  const auto code_of = [](const TopologyDescriptor& d) {
    try {
      build_topology(d);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::usage;
  };
  EXPECT_EQ(code_of(TopologyDescriptor::square(0, 3)), ErrorCode::descriptor);
  EXPECT_EQ(code_of(TopologyDescriptor::hexagon(0)), ErrorCode::descriptor);
  EXPECT_EQ(code_of(TopologyDescriptor::ring(2)), ErrorCode::descriptor);
  EXPECT_EQ(code_of(TopologyDescriptor::tree(1, 0)), ErrorCode::descriptor);
  auto bad = TopologyDescriptor::square(3, 3);
  bad.size = 2;
  EXPECT_EQ(code_of(bad), ErrorCode::descriptor);
}

TEST(Topology, DescriptorJsonRoundTrip) {
  for (const auto& d : bounded_suite()) {
    const auto j = to_json(d);
    EXPECT_EQ(j.at("version"), 1);
    EXPECT_TRUE(j.contains("kind") && j.contains("params") && j.contains("seed"));
    EXPECT_EQ(descriptor_from_json(j), d);
  }
}

TEST(Topology, NodeEdgeCorrelationAcrossExperimentalSuite) {
  // The families evaluated end to end; see the acceptance oracle line.
  const std::vector<TopologyDescriptor> suite = {
      TopologyDescriptor::square(3, 3), TopologyDescriptor::rhombus(3, 3), TopologyDescriptor::hexagon(1),
      TopologyDescriptor::hexagon(2),   TopologyDescriptor::triangle(2),   TopologyDescriptor::triangle(3),
      TopologyDescriptor::ring(9),      TopologyDescriptor::ring(12)};
  std::vector<double> nodes, edges;
  for (const auto& desc : suite) {
    const auto m = build_topology(desc);
    nodes.push_back(static_cast<double>(m.node_count()));
    edges.push_back(static_cast<double>(m.edge_count()));
  }
  const auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const double mx = mean(nodes), my = mean(edges);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    sxy += (nodes[i] - mx) * (edges[i] - my);
    sxx += (nodes[i] - mx) * (nodes[i] - mx);
    syy += (edges[i] - my) * (edges[i] - my);
  }
  EXPECT_GT(sxy / std::sqrt(sxx * syy), 0.99);
}

TEST(Topology, LayoutRowsCoverEveryNodeOnce) {
  for (const auto& desc : bounded_suite()) {
    const auto m = build_topology(desc);
    std::vector<int> count(m.node_count(), 0);
    for (const auto& row : m.layout_rows())
      for (auto n : row) ++count[n];
    for (auto c : count) EXPECT_EQ(c, 1) << desc.tag();
  }
}
