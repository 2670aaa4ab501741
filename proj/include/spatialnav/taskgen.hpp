#pragma once

// Task generation: object placement, loop-closure and global walks, tree
// kinship questions and grid-size inference.

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "spatialnav/errors.hpp"
#include "spatialnav/instance.hpp"
#include "spatialnav/random.hpp"
#include "spatialnav/topology.hpp"

namespace spatialnav {

/// Distinct lowercase object names. Labels may not contain the list
/// separators used by map serialization (",", ".", " and ").
class ObjectVocabulary {
 public:
  explicit ObjectVocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
      if (l.empty()) throw config_error("empty vocabulary label");
      if (l.find_first_of(",.\n\r\t") != std::string::npos || l.find(" and ") != std::string::npos ||
          l.front() == ' ' || l.back() == ' ') {
        throw config_error("vocabulary label '" + l + "' contains a separator");
      }
      if (std::any_of(l.begin(), l.end(), [](unsigned char c) { return c >= 'A' && c <= 'Z'; })) {
        throw config_error("vocabulary label '" + l + "' is not lowercase");
      }
      if (!seen.insert(l).second) throw config_error("duplicate vocabulary label '" + l + "'");
    }
  }

  /// Newline-delimited text, blank lines ignored.
  static ObjectVocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open vocabulary " + path);
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) labels.push_back(line);
    }
    return ObjectVocabulary(std::move(labels));
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }

 private:
  std::vector<std::string> labels_;
};

/// Assigns distinct labels drawn uniformly without replacement.
inline World populate(TopologyMap map, const ObjectVocabulary& vocab, std::uint64_t seed) {
  const auto n = map.node_count();
  if (vocab.size() < n) {
    throw generation_error("vocabulary of " + std::to_string(vocab.size()) +
                           " labels is too small for " + std::to_string(n) + " nodes");
  }
  Rng rng(seed);
  std::vector<std::size_t> idx(vocab.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    labels.push_back(vocab.labels()[idx[i]]);
  }
  return World(std::move(map), std::move(labels), seed);
}

// ---------------------------------------------------------------------------
// Walks

namespace detail {

inline bool extend_closure_search(const TopologyMap& map, std::vector<NodeId>& path,
                                  std::vector<bool>& visited, int remaining) {
  const NodeId here = path.back();
  if (remaining == 0) {
    const NodeId prev = path.size() >= 2 ? path[path.size() - 2] : here;
    for (const auto& nb : map.neighbors(here)) {
      if (visited[nb.node] && nb.node != prev) return true;
    }
    return false;
  }
  for (const auto& nb : map.neighbors(here)) {
    if (visited[nb.node]) continue;
    visited[nb.node] = true;
    path.push_back(nb.node);
    const bool ok = extend_closure_search(map, path, visited, remaining - 1);
    path.pop_back();
    visited[nb.node] = false;
    if (ok) return true;
  }
  return false;
}

}  // namespace detail

/// Exhaustive check that some self-avoiding walk of k-1 steps can be closed
/// by a k-th step onto an earlier node other than the one just left.
inline bool admits_loop_closure(const TopologyMap& map, int k) {
  if (k < 2) return false;
  std::vector<bool> visited(map.node_count(), false);
  for (NodeId s = 0; s < map.node_count(); ++s) {
    std::vector<NodeId> path{s};
    visited[s] = true;
    const bool ok = detail::extend_closure_search(map, path, visited, k - 1);
    visited[s] = false;
    if (ok) return true;
  }
  return false;
}

/// Random self-avoiding walk of k-1 steps whose k-th step revisits a node.
/// Each move is uniform over unvisited neighbours; the closing move is
/// uniform over visited neighbours other than the node just left. Dead ends
/// are rejected and retried.
inline Walk gen_loop_closure_walk(const TopologyMap& map, int k, std::uint64_t seed) {
  if (k < 2) throw generation_error("loop-closure walks need k >= 2");
  constexpr int kMaxAttempts = 5000;
  Rng rng(seed);
  std::vector<bool> visited(map.node_count(), false);
  std::vector<NodeId> options;
  std::vector<Step> closing;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::fill(visited.begin(), visited.end(), false);
    Walk walk{static_cast<NodeId>(rng.below(map.node_count())), {}, Setting::local};
    visited[walk.start] = true;
    NodeId here = walk.start;
    NodeId prev = walk.start;
    bool stuck = false;
    for (int i = 1; i < k; ++i) {
      closing.clear();
      for (const auto& nb : map.neighbors(here)) {
        if (!visited[nb.node]) closing.push_back({nb.direction, nb.node});
      }
      if (closing.empty()) {
        stuck = true;
        break;
      }
      const auto next = closing[rng.below(closing.size())];
      walk.steps.push_back(next);
      visited[next.node] = true;
      prev = here;
      here = next.node;
    }
    if (stuck) continue;
    closing.clear();
    for (const auto& nb : map.neighbors(here)) {
      if (visited[nb.node] && nb.node != prev) closing.push_back({nb.direction, nb.node});
    }
    if (closing.empty()) continue;
    walk.steps.push_back(closing[rng.below(closing.size())]);
    return walk;
  }
  if (!admits_loop_closure(map, k)) {
    throw generation_error("no loop-closure walk of " + std::to_string(k) + " steps exists on " +
                           map.descriptor().tag());
  }
  throw generation_error("loop-closure sampling gave up after " + std::to_string(kMaxAttempts) +
                         " attempts on " + map.descriptor().tag());
}

/// Uniform start, then k moves each uniform over the available directions.
inline Walk gen_global_path(const TopologyMap& map, int k, std::uint64_t seed) {
  if (k < 1) throw generation_error("global paths need k >= 1");
  Rng rng(seed);
  Walk walk{static_cast<NodeId>(rng.below(map.node_count())), {}, Setting::global};
  NodeId here = walk.start;
  for (int i = 0; i < k; ++i) {
    const auto nbs = map.neighbors(here);
    const auto& nb = nbs[rng.below(nbs.size())];
    walk.steps.push_back({nb.direction, nb.node});
    here = nb.node;
  }
  return walk;
}

/// Boustrophedon cover of an h x w grid from the top-left, heading right.
inline Walk boustrophedon_walk(const TopologyMap& map) {
  const auto& d = map.descriptor();
  Walk walk{0, {}, Setting::local};
  NodeId here = 0;
  for (int r = 0; r < d.rows; ++r) {
    const Direction along = r % 2 == 0 ? Direction::right : Direction::left;
    for (int c = 1; c < d.cols; ++c) {
      here = *map.step(here, along);
      walk.steps.push_back({along, here});
    }
    if (r + 1 < d.rows) {
      here = *map.step(here, Direction::down);
      walk.steps.push_back({Direction::down, here});
    }
  }
  return walk;
}

// ---------------------------------------------------------------------------
// Trees

inline std::optional<NodeId> ancestor(const TopologyMap& tree, NodeId n, int generations) {
  std::optional<NodeId> at = n;
  for (int i = 0; i < generations && at; ++i) at = tree.parent(*at);
  return at;
}

/// Relatives of `anchor`, ascending by id. Every relation spans 4 edges.
inline std::vector<NodeId> relatives(const TopologyMap& tree, NodeId anchor, TreeRelation rel) {
  std::vector<NodeId> out;
  switch (rel) {
    case TreeRelation::great_great_grandparent:
      if (auto a = ancestor(tree, anchor, 4)) out.push_back(*a);
      break;
    case TreeRelation::great_great_grandchildren: {
      std::vector<NodeId> level{anchor};
      for (int g = 0; g < 4; ++g) {
        std::vector<NodeId> next;
        for (auto x : level) {
          for (auto c : tree.children(x)) next.push_back(c);
        }
        level = std::move(next);
      }
      out = std::move(level);
      break;
    }
    case TreeRelation::cousin: {
      const auto parent = tree.parent(anchor);
      const auto grand = ancestor(tree, anchor, 2);
      if (!grand) break;
      for (auto uncle : tree.children(*grand)) {
        if (uncle == *parent) continue;
        for (auto c : tree.children(uncle)) out.push_back(c);
      }
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::string> labels_of(const World& world, const std::vector<NodeId>& nodes) {
  std::vector<std::string> out;
  for (auto n : nodes) out.push_back(world.label(n));
  return out;
}

/// Sorted label set, the canonical form of set-valued ground truth.
inline std::vector<std::string> as_sorted_set(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// Anchor uniform among nodes whose relation is non-empty.
inline TaskInstance gen_tree_question(const World& world, TreeRelation rel, std::uint64_t seed) {
  const auto& map = world.map();
  if (map.kind() != TopologyKind::tree) throw generation_error("tree question on a non-tree map");
  std::vector<NodeId> eligible;
  for (NodeId n = 0; n < map.node_count(); ++n) {
    if (!relatives(map, n, rel).empty()) eligible.push_back(n);
  }
  if (eligible.empty()) {
    throw generation_error("no node has a " + std::string(to_string(rel)) + " in " +
                           map.descriptor().tag());
  }
  Rng rng(seed);
  const NodeId anchor = eligible[rng.below(eligible.size())];
  TaskInstance t{"",
                 TaskKind::tree_kinship,
                 SerializationOrder::tree_dfs,
                 world,
                 Walk{anchor, {}, Setting::global},
                 TreeQuestion{rel, anchor},
                 std::nullopt,
                 as_sorted_set(labels_of(world, relatives(map, anchor, rel))),
                 seed,
                 {},
                 std::nullopt};
  return t;
}

// ---------------------------------------------------------------------------
// Size inference

inline TaskInstance gen_size_inference(int height, int width, bool with_items,
                                       const ObjectVocabulary& vocab, std::uint64_t seed) {
  if (height < 2 || width < 2) throw generation_error("size inference needs height, width >= 2");
  auto map = build_topology(TopologyDescriptor::square(height, width));
  World world = with_items ? populate(std::move(map), vocab, derive_seed(seed, "populate"))
                           : World(std::move(map), {}, seed);
  Walk walk = boustrophedon_walk(world.map());
  return TaskInstance{"",
                      TaskKind::size_inference,
                      SerializationOrder::none,
                      std::move(world),
                      std::move(walk),
                      std::nullopt,
                      SizeQuestion{height, width, with_items},
                      {std::to_string(height), std::to_string(width)},
                      seed,
                      {},
                      std::nullopt};
}

// ---------------------------------------------------------------------------
// Instance assembly

/// Everything needed to generate one family of instances.
struct GenerationRequest {
  TopologyDescriptor topology = TopologyDescriptor::square(3, 3);
  TaskKind kind = TaskKind::loop_closure_local;
  SerializationOrder order = SerializationOrder::none;
  int steps = 8;
  TreeRelation relation = TreeRelation::cousin;
  bool with_items = true;  // size inference
  PromptFlags flags;

  void validate() const {
    topology.validate();
    const auto kind_name = std::string(to_string(kind));
    switch (kind) {
      case TaskKind::loop_closure_local:
        if (topology.kind == TopologyKind::tree) throw Error(ErrorCode::usage, "trees have no loops");
        if (order != SerializationOrder::none) {
          throw Error(ErrorCode::usage, "local instances take no serialization order");
        }
        if (steps < 2) throw Error(ErrorCode::usage, "local instances need steps >= 2");
        break;
      case TaskKind::path_global:
        if (order == SerializationOrder::none || !order_applies(order, topology.kind)) {
          throw Error(ErrorCode::usage, "order " + std::string(to_string(order)) +
                                            " does not apply to " + topology.tag());
        }
        if (steps < 1) throw Error(ErrorCode::usage, "global instances need steps >= 1");
        break;
      case TaskKind::tree_kinship:
        if (topology.kind != TopologyKind::tree) throw Error(ErrorCode::usage, kind_name + " needs a tree");
        if (order != SerializationOrder::tree_dfs && order != SerializationOrder::tree_bfs) {
          throw Error(ErrorCode::usage, "tree questions use tree_dfs or tree_bfs order");
        }
        break;
      case TaskKind::size_inference:
        if (topology.kind != TopologyKind::square || topology.rows < 2 || topology.cols < 2) {
          throw Error(ErrorCode::usage, "size inference needs a square grid of at least 2x2");
        }
        break;
    }
    if (flags.cot_shots < 0) throw Error(ErrorCode::usage, "cot shots must be >= 0");
  }
};

/// Unrendered instance for a request. The instance seed drives every random
/// choice through named child seeds ("tree", "populate", "walk", "question").
inline TaskInstance generate_instance(const GenerationRequest& req, const ObjectVocabulary& vocab,
                                      std::uint64_t seed, std::string id) {
  req.validate();
  TaskInstance t = [&]() -> TaskInstance {
    switch (req.kind) {
      case TaskKind::size_inference:
        return gen_size_inference(req.topology.rows, req.topology.cols, req.with_items, vocab, seed);
      case TaskKind::tree_kinship: {
        auto desc = req.topology;
        desc.seed = derive_seed(seed, "tree");
        World world = populate(build_topology(desc), vocab, derive_seed(seed, "populate"));
        auto q = gen_tree_question(world, req.relation, derive_seed(seed, "question"));
        q.order = req.order;
        q.seed = seed;
        return q;
      }
      case TaskKind::loop_closure_local:
      case TaskKind::path_global: {
        World world = populate(build_topology(req.topology), vocab, derive_seed(seed, "populate"));
        const bool local = req.kind == TaskKind::loop_closure_local;
        Walk walk = local ? gen_loop_closure_walk(world.map(), req.steps, derive_seed(seed, "walk"))
                          : gen_global_path(world.map(), req.steps, derive_seed(seed, "walk"));
        std::vector<std::string> truth{world.label(walk.end())};
        return TaskInstance{"",       req.kind, req.order, std::move(world), std::move(walk),
                            std::nullopt, std::nullopt, std::move(truth), seed, {},
                            std::nullopt};
      }
    }
    throw generation_error("unknown task kind");
  }();
  t.id = std::move(id);
  t.flags = req.flags;
  return t;
}

}  // namespace spatialnav
