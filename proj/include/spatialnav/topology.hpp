#pragma once

// Graph families used as navigation maps: square and rhombus grids, the
// vertex graph of a hexagon-of-hexagons patch, the subdivided triangle,
// rings and random rooted trees. Maps are immutable after construction.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdlib>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spatialnav/errors.hpp"
#include "spatialnav/random.hpp"

namespace spatialnav {

using NodeId = std::uint32_t;

enum class TopologyKind { square, rhombus, hexagon, triangle, ring, tree };

inline constexpr std::array kAllTopologyKinds = {
    TopologyKind::square, TopologyKind::rhombus, TopologyKind::hexagon,
    TopologyKind::triangle, TopologyKind::ring, TopologyKind::tree};

constexpr std::string_view to_string(TopologyKind k) noexcept {
  switch (k) {
    case TopologyKind::square: return "square";
    case TopologyKind::rhombus: return "rhombus";
    case TopologyKind::hexagon: return "hexagon";
    case TopologyKind::triangle: return "triangle";
    case TopologyKind::ring: return "ring";
    case TopologyKind::tree: return "tree";
  }
  return "?";
}

inline std::optional<TopologyKind> parse_topology_kind(std::string_view s) {
  for (auto k : kAllTopologyKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Directions

enum class Direction : std::uint8_t {
  up,
  down,
  left,
  right,
  upper_left,
  upper_right,
  lower_left,
  lower_right,
  clockwise,
  counterclockwise,
  parent,
  child,
};

inline constexpr std::array kAllDirections = {
    Direction::up,         Direction::down,        Direction::left,
    Direction::right,      Direction::upper_left,  Direction::upper_right,
    Direction::lower_left, Direction::lower_right, Direction::clockwise,
    Direction::counterclockwise, Direction::parent, Direction::child};

constexpr Direction opposite(Direction d) noexcept {
  switch (d) {
    case Direction::up: return Direction::down;
    case Direction::down: return Direction::up;
    case Direction::left: return Direction::right;
    case Direction::right: return Direction::left;
    case Direction::upper_left: return Direction::lower_right;
    case Direction::upper_right: return Direction::lower_left;
    case Direction::lower_left: return Direction::upper_right;
    case Direction::lower_right: return Direction::upper_left;
    case Direction::clockwise: return Direction::counterclockwise;
    case Direction::counterclockwise: return Direction::clockwise;
    case Direction::parent: return Direction::child;
    case Direction::child: return Direction::parent;
  }
  return d;
}

constexpr std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::left: return "left";
    case Direction::right: return "right";
    case Direction::upper_left: return "upper-left";
    case Direction::upper_right: return "upper-right";
    case Direction::lower_left: return "lower-left";
    case Direction::lower_right: return "lower-right";
    case Direction::clockwise: return "clockwise";
    case Direction::counterclockwise: return "counterclockwise";
    case Direction::parent: return "parent";
    case Direction::child: return "child";
  }
  return "?";
}

inline std::optional<Direction> parse_direction(std::string_view s) {
  for (auto d : kAllDirections) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

/// Direction labels a family can emit, in canonical order.
inline std::vector<Direction> direction_vocabulary(TopologyKind kind) {
  using enum Direction;
  switch (kind) {
    case TopologyKind::square: return {up, down, left, right};
    case TopologyKind::rhombus:
      return {upper_left, upper_right, lower_left, lower_right};
    case TopologyKind::hexagon:
      return {up, down, upper_left, upper_right, lower_left, lower_right};
    case TopologyKind::triangle:
      return {left, right, upper_left, upper_right, lower_left, lower_right};
    case TopologyKind::ring: return {clockwise, counterclockwise};
    case TopologyKind::tree: return {parent, child};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Exact coordinates

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const auto g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;
  friend constexpr std::strong_ordering operator<=>(const Rational& a,
                                                    const Rational& b) {
    return a.num * b.den <=> b.num * a.den;
  }
};

/// Lattice position. Square/rhombus: column and (negated) row. Hexagon: x in
/// units of sqrt(3)/2, y in half edge lengths. Triangle: x in edge lengths, y
/// in row heights. Ring: index. Tree: (order within level, -depth).
/// y grows upwards in every family.
struct Point {
  Rational x;
  Rational y;
  friend constexpr bool operator==(const Point&, const Point&) = default;
};

// ---------------------------------------------------------------------------
// Descriptor

struct TopologyDescriptor {
  TopologyKind kind = TopologyKind::square;
  int rows = 0;   // square, rhombus
  int cols = 0;   // square, rhombus
  int size = 0;   // hexagon, triangle
  int nodes = 0;  // ring, tree
  std::uint64_t seed = 0;  // tree shape only

  static TopologyDescriptor square(int rows, int cols) {
    return {TopologyKind::square, rows, cols, 0, 0, 0};
  }
  static TopologyDescriptor rhombus(int rows, int cols) {
    return {TopologyKind::rhombus, rows, cols, 0, 0, 0};
  }
  static TopologyDescriptor hexagon(int size) {
    return {TopologyKind::hexagon, 0, 0, size, 0, 0};
  }
  static TopologyDescriptor triangle(int size) {
    return {TopologyKind::triangle, 0, 0, size, 0, 0};
  }
  static TopologyDescriptor ring(int n) {
    return {TopologyKind::ring, 0, 0, 0, n, 0};
  }
  static TopologyDescriptor tree(int n, std::uint64_t seed) {
    return {TopologyKind::tree, 0, 0, 0, n, seed};
  }

  void validate() const {
    const auto name = std::string(to_string(kind));
    switch (kind) {
      case TopologyKind::square:
      case TopologyKind::rhombus:
        if (rows < 1 || cols < 1) {
          throw descriptor_error(name + " needs rows >= 1 and cols >= 1");
        }
        if (rows * cols < 2) throw descriptor_error(name + " needs at least 2 cells");
        if (size != 0 || nodes != 0) throw descriptor_error(name + " takes only rows/cols");
        break;
      case TopologyKind::hexagon:
      case TopologyKind::triangle:
        if (size < 1) throw descriptor_error(name + " needs size >= 1");
        if (rows != 0 || cols != 0 || nodes != 0) {
          throw descriptor_error(name + " takes only size");
        }
        break;
      case TopologyKind::ring:
        if (nodes < 3) throw descriptor_error("ring needs n >= 3");
        if (rows != 0 || cols != 0 || size != 0) throw descriptor_error("ring takes only n");
        break;
      case TopologyKind::tree:
        if (nodes < 2) throw descriptor_error("tree needs n >= 2");
        if (rows != 0 || cols != 0 || size != 0) throw descriptor_error("tree takes only n");
        break;
    }
    if (kind != TopologyKind::tree && seed != 0) {
      throw descriptor_error(name + " takes no shape seed");
    }
  }

  /// Short human-readable tag such as "square-3x3" or "hexagon-2".
  std::string tag() const {
    switch (kind) {
      case TopologyKind::square:
      case TopologyKind::rhombus:
        return std::string(to_string(kind)) + "-" + std::to_string(rows) + "x" +
               std::to_string(cols);
      case TopologyKind::hexagon:
      case TopologyKind::triangle:
        return std::string(to_string(kind)) + "-" + std::to_string(size);
      case TopologyKind::ring:
      case TopologyKind::tree:
        return std::string(to_string(kind)) + "-" + std::to_string(nodes);
    }
    return "?";
  }

  friend bool operator==(const TopologyDescriptor&, const TopologyDescriptor&) = default;
};

inline constexpr int kDescriptorVersion = 1;

inline nlohmann::json to_json(const TopologyDescriptor& d) {
  nlohmann::json params = nlohmann::json::object();
  switch (d.kind) {
    case TopologyKind::square:
    case TopologyKind::rhombus:
      params["rows"] = d.rows;
      params["cols"] = d.cols;
      break;
    case TopologyKind::hexagon:
    case TopologyKind::triangle: params["size"] = d.size; break;
    case TopologyKind::ring:
    case TopologyKind::tree: params["n"] = d.nodes; break;
  }
  return {{"version", kDescriptorVersion},
          {"kind", std::string(to_string(d.kind))},
          {"params", params},
          {"seed", d.seed}};
}

inline TopologyDescriptor descriptor_from_json(const nlohmann::json& j) {
  try {
    if (j.value("version", kDescriptorVersion) != kDescriptorVersion) {
      throw format_error("unsupported topology descriptor version");
    }
    const auto kind = parse_topology_kind(j.at("kind").get<std::string>());
    if (!kind) throw format_error("unknown topology kind " + j.at("kind").dump());
    TopologyDescriptor d;
    d.kind = *kind;
    const auto& p = j.at("params");
    d.rows = p.value("rows", 0);
    d.cols = p.value("cols", 0);
    d.size = p.value("size", 0);
    d.nodes = p.value("n", 0);
    d.seed = j.value("seed", std::uint64_t{0});
    d.validate();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("malformed topology descriptor: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Map

struct Neighbor {
  Direction direction;
  NodeId node;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

class TopologyMap {
 public:
  const TopologyDescriptor& descriptor() const noexcept { return desc_; }
  TopologyKind kind() const noexcept { return desc_.kind; }
  std::size_t node_count() const noexcept { return positions_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<std::pair<NodeId, NodeId>>& edges() const noexcept { return edges_; }

  bool contains(NodeId n) const noexcept { return n < node_count(); }

  /// Incident edges with their direction labels, in canonical label order.
  std::span<const Neighbor> neighbors(NodeId n) const {
    check(n);
    return adjacency_[n];
  }

  std::optional<NodeId> step(NodeId from, Direction d) const {
    for (const auto& nb : neighbors(from)) {
      if (nb.direction == d) return nb.node;
    }
    return std::nullopt;
  }

  /// Direction label of the edge from -> to, if adjacent.
  std::optional<Direction> direction_between(NodeId from, NodeId to) const {
    for (const auto& nb : neighbors(from)) {
      if (nb.node == to) return nb.direction;
    }
    return std::nullopt;
  }

  const Point& position(NodeId n) const {
    check(n);
    return positions_[n];
  }

  /// Tree depth (root = 0); 0 for every node of the other families.
  int depth(NodeId n) const {
    check(n);
    return depth_.empty() ? 0 : depth_[n];
  }

  std::optional<NodeId> parent(NodeId n) const { return step(n, Direction::parent); }

  std::vector<NodeId> children(NodeId n) const {
    std::vector<NodeId> out;
    for (const auto& nb : neighbors(n)) {
      if (nb.direction == Direction::child) out.push_back(nb.node);
    }
    return out;
  }

  /// Rows for map serialization, top to bottom, each left to right. For
  /// square and rhombus these are the grid rows; for hexagon and triangle
  /// they are the horizontal levels of the drawing; a ring is one row in
  /// clockwise order from the top; a tree lists its levels.
  const std::vector<std::vector<NodeId>>& layout_rows() const noexcept { return rows_; }

  friend TopologyMap build_topology(const TopologyDescriptor& desc);

 private:
  TopologyMap() = default;

  void check(NodeId n) const {
    if (!contains(n)) {
      throw lookup_error("node " + std::to_string(n) + " not in " + desc_.tag());
    }
  }

  TopologyDescriptor desc_;
  std::vector<Point> positions_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<int> depth_;
  std::vector<std::vector<NodeId>> rows_;
};

namespace detail {

struct MapBuilder {
  std::vector<Point> positions;
  std::vector<std::vector<Neighbor>> adjacency;
  std::vector<std::pair<NodeId, NodeId>> edges;

  explicit MapBuilder(std::size_t n) : adjacency(n) {}

  void link(NodeId a, Direction a_to_b, NodeId b) {
    adjacency[a].push_back({a_to_b, b});
    adjacency[b].push_back({opposite(a_to_b), a});
    edges.emplace_back(std::min(a, b), std::max(a, b));
  }

  void finish() {
    for (auto& nbs : adjacency) {
      std::stable_sort(nbs.begin(), nbs.end(), [](const Neighbor& x, const Neighbor& y) {
        if (x.direction != y.direction) return x.direction < y.direction;
        return x.node < y.node;
      });
    }
    std::sort(edges.begin(), edges.end());
  }
};

/// Groups nodes by y (descending) and orders each group by x.
inline std::vector<std::vector<NodeId>> rows_by_level(const std::vector<Point>& pos) {
  std::map<Rational, std::vector<NodeId>, std::greater<>> levels;
  for (NodeId i = 0; i < pos.size(); ++i) levels[pos[i].y].push_back(i);
  std::vector<std::vector<NodeId>> rows;
  for (auto& [y, ids] : levels) {
    std::sort(ids.begin(), ids.end(),
              [&](NodeId a, NodeId b) { return pos[a].x < pos[b].x; });
    rows.push_back(std::move(ids));
  }
  return rows;
}

inline MapBuilder build_grid(const TopologyDescriptor& d, bool rotated) {
  const auto n = static_cast<std::size_t>(d.rows) * d.cols;
  MapBuilder b(n);
  const auto id = [&](int r, int c) { return static_cast<NodeId>(r * d.cols + c); };
  for (int r = 0; r < d.rows; ++r) {
    for (int c = 0; c < d.cols; ++c) {
      // The rhombus is the square rotated 45 degrees counterclockwise.
      b.positions.push_back(rotated ? Point{Rational(c + r), Rational(c - r)}
                                    : Point{Rational(c), Rational(-r)});
    }
  }
  const Direction right = rotated ? Direction::upper_right : Direction::right;
  const Direction down = rotated ? Direction::lower_right : Direction::down;
  for (int r = 0; r < d.rows; ++r) {
    for (int c = 0; c < d.cols; ++c) {
      if (c + 1 < d.cols) b.link(id(r, c), right, id(r, c + 1));
      if (r + 1 < d.rows) b.link(id(r, c), down, id(r + 1, c));
    }
  }
  return b;
}

inline MapBuilder build_hexagon(const TopologyDescriptor& d) {
  // Pointy-top cells in axial coordinates (q, r) with max(|q|,|r|,|q+r|) < s.
  // Corner coordinates are integers in units (sqrt(3)/2, 1/2).
  static constexpr std::array<std::pair<int, int>, 6> kCorners = {
      {{0, 2}, {1, 1}, {1, -1}, {0, -2}, {-1, -1}, {-1, 1}}};
  const int s = d.size;
  std::map<std::pair<int, int>, NodeId> index;
  std::vector<std::pair<int, int>> corners;
  std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> sides;
  for (int q = -(s - 1); q <= s - 1; ++q) {
    for (int r = -(s - 1); r <= s - 1; ++r) {
      if (std::abs(q + r) > s - 1) continue;
      const int cx = 2 * q + r;
      const int cy = -3 * r;
      for (std::size_t k = 0; k < kCorners.size(); ++k) {
        const auto a = std::pair{cx + kCorners[k].first, cy + kCorners[k].second};
        const auto& nk = kCorners[(k + 1) % kCorners.size()];
        const auto bb = std::pair{cx + nk.first, cy + nk.second};
        corners.push_back(a);
        sides.emplace_back(std::min(a, bb), std::max(a, bb));
      }
    }
  }
  std::sort(corners.begin(), corners.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
  MapBuilder b(corners.size());
  for (NodeId i = 0; i < corners.size(); ++i) {
    index[corners[i]] = i;
    b.positions.push_back({Rational(corners[i].first), Rational(corners[i].second)});
  }
  std::sort(sides.begin(), sides.end());
  sides.erase(std::unique(sides.begin(), sides.end()), sides.end());
  for (const auto& [p, q] : sides) {
    const int dx = q.first - p.first;
    const int dy = q.second - p.second;
    Direction dir;
    if (dx == 0) {
      dir = dy > 0 ? Direction::up : Direction::down;
    } else if (dy > 0) {
      dir = dx > 0 ? Direction::upper_right : Direction::upper_left;
    } else {
      dir = dx > 0 ? Direction::lower_right : Direction::lower_left;
    }
    b.link(index.at(p), dir, index.at(q));
  }
  return b;
}

inline MapBuilder build_triangle(const TopologyDescriptor& d) {
  // Row r (apex row 0) holds r+1 vertices.
  const int s = d.size;
  MapBuilder b(static_cast<std::size_t>((s + 1) * (s + 2) / 2));
  const auto id = [](int r, int i) { return static_cast<NodeId>(r * (r + 1) / 2 + i); };
  for (int r = 0; r <= s; ++r) {
    for (int i = 0; i <= r; ++i) {
      b.positions.push_back({Rational(2 * i - r, 2), Rational(-r)});
    }
  }
  for (int r = 0; r <= s; ++r) {
    for (int i = 0; i <= r; ++i) {
      if (i < r) b.link(id(r, i), Direction::right, id(r, i + 1));
      if (r < s) {
        b.link(id(r, i), Direction::lower_left, id(r + 1, i));
        b.link(id(r, i), Direction::lower_right, id(r + 1, i + 1));
      }
    }
  }
  return b;
}

inline MapBuilder build_ring(const TopologyDescriptor& d) {
  const auto n = static_cast<NodeId>(d.nodes);
  MapBuilder b(n);
  for (NodeId i = 0; i < n; ++i) b.positions.push_back({Rational(i), Rational(0)});
  for (NodeId i = 0; i < n; ++i) b.link(i, Direction::clockwise, (i + 1) % n);
  return b;
}

/// Parent array (root has parent n) of a uniform labeled tree decoded from a
/// random Pruefer sequence and rooted at a uniform node.
inline std::vector<NodeId> random_rooted_tree(NodeId n, Rng& rng, NodeId& root) {
  std::vector<std::vector<NodeId>> adj(n);
  if (n == 2) {
    adj[0].push_back(1);
    adj[1].push_back(0);
  } else {
    std::vector<NodeId> code(n - 2);
    for (auto& c : code) c = static_cast<NodeId>(rng.below(n));
    std::vector<int> degree(n, 1);
    for (auto c : code) ++degree[c];
    for (auto c : code) {
      NodeId leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      adj[leaf].push_back(c);
      adj[c].push_back(leaf);
      --degree[leaf];
      --degree[c];
    }
    NodeId u = n, v = n;
    for (NodeId i = 0; i < n; ++i) {
      if (degree[i] == 1) (u == n ? u : v) = i;
    }
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  root = static_cast<NodeId>(rng.below(n));
  std::vector<NodeId> parent(n, n);
  std::vector<bool> seen(n, false);
  std::deque<NodeId> queue{root};
  seen[root] = true;
  while (!queue.empty()) {
    const auto x = queue.front();
    queue.pop_front();
    for (auto y : adj[x]) {
      if (!seen[y]) {
        seen[y] = true;
        parent[y] = x;
        queue.push_back(y);
      }
    }
  }
  return parent;
}

inline MapBuilder build_tree(const TopologyDescriptor& d, std::vector<int>& depth_out) {
  const auto n = static_cast<NodeId>(d.nodes);
  // Depth >= 4 plus a first-cousin pair needs at least 7 nodes.
  const bool constrained = n >= 7;
  constexpr int kMaxAttempts = 100000;
  Rng rng(derive_seed(d.seed, "tree-shape"));
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    NodeId root = 0;
    auto parent = random_rooted_tree(n, rng, root);
    std::vector<std::vector<NodeId>> kids(n);
    for (NodeId i = 0; i < n; ++i) {
      if (i != root) kids[parent[i]].push_back(i);
    }
    // Relabel breadth-first from the root so ids follow levels.
    std::vector<NodeId> order{root};
    for (std::size_t h = 0; h < order.size(); ++h) {
      for (auto c : kids[order[h]]) order.push_back(c);
    }
    std::vector<NodeId> relabel(n);
    for (NodeId i = 0; i < n; ++i) relabel[order[i]] = i;
    std::vector<int> depth(n, 0);
    std::vector<NodeId> par(n, n);
    for (NodeId i = 1; i < n; ++i) {
      par[i] = relabel[parent[order[i]]];
      depth[i] = depth[par[i]] + 1;
    }
    if (constrained) {
      const bool deep = *std::max_element(depth.begin(), depth.end()) >= 4;
      bool cousins = false;
      for (NodeId a = 0; a < n && !cousins; ++a) {
        for (NodeId b = a + 1; b < n && !cousins; ++b) {
          cousins = depth[a] >= 2 && depth[a] == depth[b] && par[a] != par[b] &&
                    par[par[a]] == par[par[b]];
        }
      }
      if (!deep || !cousins) continue;
    }
    MapBuilder b(n);
    std::vector<int> seen_at_depth(n, 0);
    for (NodeId i = 0; i < n; ++i) {
      b.positions.push_back({Rational(seen_at_depth[depth[i]]++), Rational(-depth[i])});
    }
    for (NodeId i = 1; i < n; ++i) b.link(par[i], Direction::child, i);
    depth_out = std::move(depth);
    return b;
  }
  throw generation_error("no tree satisfying depth/cousin constraints for " + d.tag());
}

}  // namespace detail

/// Builds the map for a descriptor; trees are a pure function of desc.seed.
inline TopologyMap build_topology(const TopologyDescriptor& desc) {
  desc.validate();
  TopologyMap m;
  m.desc_ = desc;
  std::vector<int> depth;
  detail::MapBuilder b = [&] {
    switch (desc.kind) {
      case TopologyKind::square: return detail::build_grid(desc, false);
      case TopologyKind::rhombus: return detail::build_grid(desc, true);
      case TopologyKind::hexagon: return detail::build_hexagon(desc);
      case TopologyKind::triangle: return detail::build_triangle(desc);
      case TopologyKind::ring: return detail::build_ring(desc);
      case TopologyKind::tree: return detail::build_tree(desc, depth);
    }
    throw descriptor_error("unknown topology kind");
  }();
  b.finish();
  m.positions_ = std::move(b.positions);
  m.adjacency_ = std::move(b.adjacency);
  m.edges_ = std::move(b.edges);
  m.depth_ = std::move(depth);
  switch (desc.kind) {
    case TopologyKind::square:
    case TopologyKind::rhombus:
      for (int r = 0; r < desc.rows; ++r) {
        auto& row = m.rows_.emplace_back();
        for (int c = 0; c < desc.cols; ++c) row.push_back(static_cast<NodeId>(r * desc.cols + c));
      }
      break;
    case TopologyKind::ring: {
      auto& row = m.rows_.emplace_back();
      for (NodeId i = 0; i < m.node_count(); ++i) row.push_back(i);
      break;
    }
    default: m.rows_ = detail::rows_by_level(m.positions_); break;
  }
  return m;
}

inline TopologyMap build_topology(TopologyDescriptor desc, std::uint64_t seed) {
  desc.seed = desc.kind == TopologyKind::tree ? seed : 0;
  return build_topology(desc);
}

// ---------------------------------------------------------------------------
// Queries

/// Breadth-first distances from `source`; unreachable nodes get -1.
inline std::vector<int> distances_from(const TopologyMap& map, NodeId source) {
  std::vector<int> dist(map.node_count(), -1);
  map.neighbors(source);  // validates
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const auto x = queue.front();
    queue.pop_front();
    for (const auto& nb : map.neighbors(x)) {
      if (dist[nb.node] < 0) {
        dist[nb.node] = dist[x] + 1;
        queue.push_back(nb.node);
      }
    }
  }
  return dist;
}

inline int shortest_distance(const TopologyMap& map, NodeId a, NodeId b) {
  if (!map.contains(b)) throw lookup_error("node " + std::to_string(b) + " not in map");
  return distances_from(map, a)[b];
}

/// All-pairs shortest distances by repeated breadth-first search.
inline std::vector<std::vector<int>> distance_matrix(const TopologyMap& map) {
  std::vector<std::vector<int>> out;
  out.reserve(map.node_count());
  for (NodeId i = 0; i < map.node_count(); ++i) out.push_back(distances_from(map, i));
  return out;
}

inline bool is_connected(const TopologyMap& map) {
  if (map.node_count() == 0) return true;
  const auto d = distances_from(map, 0);
  return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
}

/// Length of the shortest cycle, or nullopt for a forest.
inline std::optional<int> girth(const TopologyMap& map) {
  int best = std::numeric_limits<int>::max();
  for (NodeId root = 0; root < map.node_count(); ++root) {
    std::vector<int> dist(map.node_count(), -1);
    std::vector<NodeId> from(map.node_count(), root);
    std::deque<NodeId> queue{root};
    dist[root] = 0;
    while (!queue.empty()) {
      const auto x = queue.front();
      queue.pop_front();
      for (const auto& nb : map.neighbors(x)) {
        if (dist[nb.node] < 0) {
          dist[nb.node] = dist[x] + 1;
          from[nb.node] = x;
          queue.push_back(nb.node);
        } else if (from[x] != nb.node) {
          best = std::min(best, dist[x] + dist[nb.node] + 1);
        }
      }
    }
  }
  if (best == std::numeric_limits<int>::max()) return std::nullopt;
  return best;
}

}  // namespace spatialnav
