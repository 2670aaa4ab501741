#pragma once

// Independent reference implementations used only by the tests. None of
// these reuse library code: they work from raw edge lists, floating-point
// geometry or parent arrays.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using Edges = std::vector<std::pair<std::size_t, std::size_t>>;
using Adjacency = std::vector<std::vector<std::size_t>>;

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

inline std::vector<std::vector<int>> floyd_warshall(std::size_t n, const Edges& edges) {
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& [a, b] : edges) d[a][b] = d[b][a] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

inline Adjacency adjacency(std::size_t n, const Edges& edges) {
  Adjacency adj(n);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

/// Shortest cycle: for each edge, the shortest path between its ends
/// avoiding that edge, plus one. kInf for a forest.
inline int brute_girth(std::size_t n, const Edges& edges) {
  const auto adj = adjacency(n, edges);
  int best = kInf;
  for (const auto& [u, v] : edges) {
    std::vector<int> dist(n, -1);
    std::deque<std::size_t> q{u};
    dist[u] = 0;
    while (!q.empty()) {
      const auto x = q.front();
      q.pop_front();
      for (auto y : adj[x]) {
        if ((x == u && y == v) || (x == v && y == u)) continue;
        if (dist[y] < 0) {
          dist[y] = dist[x] + 1;
          q.push_back(y);
        }
      }
    }
    if (dist[v] > 0) best = std::min(best, dist[v] + 1);
  }
  return best;
}

struct Geometry {
  std::size_t nodes = 0;
  Edges edges;
};

/// Vertices and sides of a hexagon-of-hexagons patch computed with
/// floating-point trigonometry and snapping.
inline Geometry hex_patch_geometry(int s) {
  const double pi = std::acos(-1.0);
  std::map<std::pair<long, long>, std::size_t> ids;
  std::set<std::pair<std::size_t, std::size_t>> sides;
  const auto vertex = [&](double x, double y) {
    const auto key = std::pair{std::lround(x * 1e6), std::lround(y * 1e6)};
    const auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    const auto id = ids.size();
    ids.emplace(key, id);
    return id;
  };
  // Cube coordinates; a cell is in the patch when its cube distance to the
  // centre cell is below s.
  for (int x = -(s - 1); x <= s - 1; ++x) {
    for (int y = -(s - 1); y <= s - 1; ++y) {
      const int z = -x - y;
      if (std::max({std::abs(x), std::abs(y), std::abs(z)}) > s - 1) continue;
      const double cx = std::sqrt(3.0) * (x + z / 2.0);
      const double cy = 1.5 * z;
      std::vector<std::size_t> corner;
      for (int k = 0; k < 6; ++k) {
        const double a = pi / 6 + k * pi / 3;
        corner.push_back(vertex(cx + std::cos(a), cy + std::sin(a)));
      }
      for (int k = 0; k < 6; ++k) {
        auto a = corner[k], b = corner[(k + 1) % 6];
        sides.emplace(std::min(a, b), std::max(a, b));
      }
    }
  }
  return {ids.size(), Edges(sides.begin(), sides.end())};
}

/// Lattice points of a side-s equilateral triangle, joined when exactly one
/// unit apart (floating-point distance test).
inline Geometry triangle_geometry(int s) {
  std::vector<std::pair<double, double>> pts;
  for (int j = 0; j <= s; ++j)
    for (int i = 0; i + j <= s; ++i) pts.emplace_back(i + j / 2.0, j * std::sqrt(3.0) / 2.0);
  Geometry g{pts.size(), {}};
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const double d = std::hypot(pts[a].first - pts[b].first, pts[a].second - pts[b].second);
      if (std::abs(d - 1.0) < 1e-9) g.edges.emplace_back(a, b);
    }
  return g;
}

/// Sorted multiset of all pairwise distances: an isomorphism invariant.
inline std::vector<int> distance_spectrum(std::size_t n, const Edges& edges) {
  const auto d = floyd_warshall(n, edges);
  std::vector<int> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.push_back(d[i][j]);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::size_t> degree_sequence(std::size_t n, const Edges& edges) {
  std::vector<std::size_t> deg(n, 0);
  for (const auto& [a, b] : edges) {
    ++deg[a];
    ++deg[b];
  }
  std::sort(deg.begin(), deg.end());
  return deg;
}

// --- kinship ---------------------------------------------------------------

/// parent[root] = npos.
inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

inline std::size_t ancestor(const std::vector<std::size_t>& parent, std::size_t x, int up) {
  for (int i = 0; i < up && x != npos; ++i) x = parent[x];
  return x;
}

inline std::set<std::size_t> cousins(const std::vector<std::size_t>& parent, std::size_t a) {
  std::set<std::size_t> out;
  const auto ga = ancestor(parent, a, 2);
  if (ga == npos) return out;
  for (std::size_t x = 0; x < parent.size(); ++x) {
    if (x != a && ancestor(parent, x, 2) == ga && parent[x] != parent[a]) out.insert(x);
  }
  return out;
}

inline std::set<std::size_t> great_great_grandparent(const std::vector<std::size_t>& parent, std::size_t a) {
  const auto g = ancestor(parent, a, 4);
  if (g == npos) return {};
  return {g};
}

inline std::set<std::size_t> great_great_grandchildren(const std::vector<std::size_t>& parent, std::size_t a) {
  std::set<std::size_t> out;
  for (std::size_t x = 0; x < parent.size(); ++x) {
    if (ancestor(parent, x, 4) == a) out.insert(x);
  }
  return out;
}

}  // namespace oracle
