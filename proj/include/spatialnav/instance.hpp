#pragma once

// Domain records shared by generation, rendering, evaluation and analysis,
// plus their versioned JSON-lines encoding.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spatialnav/errors.hpp"
#include "spatialnav/topology.hpp"

namespace spatialnav {

inline constexpr int kInstanceFormatVersion = 1;

enum class Setting { local, global };

enum class TaskKind { loop_closure_local, path_global, tree_kinship, size_inference };

enum class SerializationOrder {
  none,
  row_major,
  snake,
  random,
  snake_coord,
  ring_clockwise,
  tree_dfs,
  tree_bfs,
};

enum class TreeRelation { cousin, great_great_grandparent, great_great_grandchildren };

constexpr std::string_view to_string(Setting s) noexcept {
  return s == Setting::local ? "local" : "global";
}

constexpr std::string_view to_string(TaskKind k) noexcept {
  switch (k) {
    case TaskKind::loop_closure_local: return "loop_closure_local";
    case TaskKind::path_global: return "path_global";
    case TaskKind::tree_kinship: return "tree_kinship";
    case TaskKind::size_inference: return "size_inference";
  }
  return "?";
}

constexpr std::string_view to_string(SerializationOrder o) noexcept {
  switch (o) {
    case SerializationOrder::none: return "none";
    case SerializationOrder::row_major: return "row_major";
    case SerializationOrder::snake: return "snake";
    case SerializationOrder::random: return "random";
    case SerializationOrder::snake_coord: return "snake_coord";
    case SerializationOrder::ring_clockwise: return "ring_clockwise";
    case SerializationOrder::tree_dfs: return "tree_dfs";
    case SerializationOrder::tree_bfs: return "tree_bfs";
  }
  return "?";
}

constexpr std::string_view to_string(TreeRelation r) noexcept {
  switch (r) {
    case TreeRelation::cousin: return "cousin";
    case TreeRelation::great_great_grandparent: return "great_great_grandparent";
    case TreeRelation::great_great_grandchildren: return "great_great_grandchildren";
  }
  return "?";
}

namespace detail {
template <class E, std::size_t N>
std::optional<E> parse_enum(std::string_view s, const E (&values)[N]) {
  for (auto v : values) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}
}  // namespace detail

inline std::optional<Setting> parse_setting(std::string_view s) {
  static constexpr Setting kValues[] = {Setting::local, Setting::global};
  return detail::parse_enum(s, kValues);
}
inline std::optional<TaskKind> parse_task_kind(std::string_view s) {
  static constexpr TaskKind kValues[] = {TaskKind::loop_closure_local, TaskKind::path_global,
                                         TaskKind::tree_kinship, TaskKind::size_inference};
  return detail::parse_enum(s, kValues);
}
inline std::optional<SerializationOrder> parse_order(std::string_view s) {
  static constexpr SerializationOrder kValues[] = {
      SerializationOrder::none,        SerializationOrder::row_major,
      SerializationOrder::snake,       SerializationOrder::random,
      SerializationOrder::snake_coord, SerializationOrder::ring_clockwise,
      SerializationOrder::tree_dfs,    SerializationOrder::tree_bfs};
  return detail::parse_enum(s, kValues);
}
inline std::optional<TreeRelation> parse_relation(std::string_view s) {
  static constexpr TreeRelation kValues[] = {TreeRelation::cousin,
                                             TreeRelation::great_great_grandparent,
                                             TreeRelation::great_great_grandchildren};
  return detail::parse_enum(s, kValues);
}

/// Whether a global serialization order can describe a topology kind.
inline bool order_applies(SerializationOrder order, TopologyKind kind) {
  using O = SerializationOrder;
  using K = TopologyKind;
  switch (order) {
    case O::none: return kind != K::tree;
    case O::row_major:
    case O::random:
      return kind == K::square || kind == K::rhombus || kind == K::hexagon || kind == K::triangle;
    case O::snake:
    case O::snake_coord: return kind == K::square || kind == K::rhombus;
    case O::ring_clockwise: return kind == K::ring;
    case O::tree_dfs:
    case O::tree_bfs: return kind == K::tree;
  }
  return false;
}

// ---------------------------------------------------------------------------

struct Step {
  Direction direction;
  NodeId node;
  friend bool operator==(const Step&, const Step&) = default;
};

struct Walk {
  NodeId start = 0;
  std::vector<Step> steps;
  Setting setting = Setting::local;

  NodeId end() const { return steps.empty() ? start : steps.back().node; }

  /// Nodes in visiting order, start first, including the final node.
  std::vector<NodeId> path() const {
    std::vector<NodeId> out{start};
    for (const auto& s : steps) out.push_back(s.node);
    return out;
  }

  friend bool operator==(const Walk&, const Walk&) = default;
};

/// A map whose nodes carry distinct object labels. Labels may be empty for
/// the direction-only size-inference variant.
class World {
 public:
  World(TopologyMap map, std::vector<std::string> labels, std::uint64_t seed)
      : map_(std::move(map)), labels_(std::move(labels)), seed_(seed) {
    if (!labels_.empty() && labels_.size() != map_.node_count()) {
      throw generation_error("world needs one label per node");
    }
    for (NodeId i = 0; i < labels_.size(); ++i) {
      if (!index_.emplace(labels_[i], i).second) {
        throw generation_error("duplicate label '" + labels_[i] + "' in world");
      }
    }
  }

  const TopologyMap& map() const noexcept { return map_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool labeled() const noexcept { return !labels_.empty(); }

  const std::string& label(NodeId n) const {
    if (n >= labels_.size()) throw lookup_error("no label for node " + std::to_string(n));
    return labels_[n];
  }

  std::optional<NodeId> find(std::string_view label) const {
    const auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  TopologyMap map_;
  std::vector<std::string> labels_;
  std::uint64_t seed_;
  std::unordered_map<std::string, NodeId> index_;
};

struct TreeQuestion {
  TreeRelation relation = TreeRelation::cousin;
  NodeId anchor = 0;
};

struct SizeQuestion {
  int height = 0;
  int width = 0;
  bool with_items = true;
};

struct Shot {
  std::string question;
  std::string explanation;
  std::string answer;
};

struct PromptFlags {
  bool detailed_description = false;
  bool coord_annotation = false;
  int cot_shots = 0;
};

struct PromptBundle {
  std::string system_prompt;
  /// Complete user message: worked examples (if any) followed by the question.
  std::string user_prompt;
  /// The target question alone, identical to the zero-shot user message.
  std::string question;
  std::vector<Shot> shots;
  PromptFlags flags;
};

struct TaskInstance {
  std::string id;
  TaskKind kind = TaskKind::loop_closure_local;
  SerializationOrder order = SerializationOrder::none;
  World world;
  Walk walk;
  std::optional<TreeQuestion> tree;
  std::optional<SizeQuestion> size;
  /// Answers; for size inference the ordered pair (height, width).
  std::vector<std::string> ground_truth;
  std::uint64_t seed = 0;
  PromptFlags flags;
  std::optional<PromptBundle> prompt;

  Setting setting() const {
    return kind == TaskKind::loop_closure_local || kind == TaskKind::size_inference
               ? Setting::local
               : Setting::global;
  }

  /// Movements asked of the reader; tree relations count as 4 steps.
  int navigation_steps() const {
    return kind == TaskKind::tree_kinship ? 4 : static_cast<int>(walk.steps.size());
  }

  TopologyKind topology() const { return world.map().kind(); }
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const PromptBundle& p) {
  nlohmann::json shots = nlohmann::json::array();
  for (const auto& s : p.shots) {
    shots.push_back({{"question", s.question}, {"explanation", s.explanation}, {"answer", s.answer}});
  }
  return {{"system", p.system_prompt},
          {"user", p.user_prompt},
          {"question", p.question},
          {"shots", shots}};
}

inline PromptBundle prompt_from_json(const nlohmann::json& j, const PromptFlags& flags) {
  PromptBundle p;
  p.system_prompt = j.at("system").get<std::string>();
  p.user_prompt = j.at("user").get<std::string>();
  p.question = j.at("question").get<std::string>();
  for (const auto& s : j.at("shots")) {
    p.shots.push_back({s.at("question").get<std::string>(), s.at("explanation").get<std::string>(),
                       s.at("answer").get<std::string>()});
  }
  p.flags = flags;
  return p;
}

inline nlohmann::json to_json(const TaskInstance& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.walk.steps) {
    steps.push_back({{"direction", std::string(to_string(s.direction))}, {"node", s.node}});
  }
  nlohmann::json j = {
      {"version", kInstanceFormatVersion},
      {"id", t.id},
      {"kind", std::string(to_string(t.kind))},
      {"setting", std::string(to_string(t.setting()))},
      {"order", std::string(to_string(t.order))},
      {"topology", to_json(t.world.map().descriptor())},
      {"world_seed", t.world.seed()},
      {"labels", t.world.labels()},
      {"walk", {{"start", t.walk.start}, {"steps", steps}}},
      {"ground_truth", t.ground_truth},
      {"metadata",
       {{"steps", t.navigation_steps()},
        {"seed", t.seed},
        {"detailed_description", t.flags.detailed_description},
        {"coord_annotation", t.flags.coord_annotation},
        {"cot_shots", t.flags.cot_shots}}},
  };
  if (t.tree) {
    j["question"] = {{"relation", std::string(to_string(t.tree->relation))},
                     {"anchor", t.tree->anchor}};
  }
  if (t.size) {
    j["size"] = {{"height", t.size->height},
                 {"width", t.size->width},
                 {"with_items", t.size->with_items}};
  }
  if (t.prompt) j["prompt"] = to_json(*t.prompt);
  return j;
}

inline TaskInstance instance_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kInstanceFormatVersion) {
      throw format_error("unsupported instance version " + j.at("version").dump());
    }
    const auto desc = descriptor_from_json(j.at("topology"));
    World world(build_topology(desc), j.at("labels").get<std::vector<std::string>>(),
                j.at("world_seed").get<std::uint64_t>());
    const auto kind = parse_task_kind(j.at("kind").get<std::string>());
    const auto order = parse_order(j.at("order").get<std::string>());
    if (!kind || !order) throw format_error("unknown kind/order in instance");
    Walk walk;
    walk.start = j.at("walk").at("start").get<NodeId>();
    for (const auto& s : j.at("walk").at("steps")) {
      const auto d = parse_direction(s.at("direction").get<std::string>());
      if (!d) throw format_error("unknown direction " + s.at("direction").dump());
      walk.steps.push_back({*d, s.at("node").get<NodeId>()});
    }
    // Replay the walk so a hand-edited file cannot smuggle in a broken path.
    NodeId at = walk.start;
    world.map().neighbors(at);
    for (const auto& s : walk.steps) {
      if (world.map().step(at, s.direction) != s.node) {
        throw format_error("walk does not replay on its map");
      }
      at = s.node;
    }
    walk.setting = (*kind == TaskKind::path_global || *kind == TaskKind::tree_kinship)
                       ? Setting::global
                       : Setting::local;
    const auto& meta = j.at("metadata");
    PromptFlags flags{meta.value("detailed_description", false),
                      meta.value("coord_annotation", false), meta.value("cot_shots", 0)};
    TaskInstance t{j.at("id").get<std::string>(),
                   *kind,
                   *order,
                   std::move(world),
                   std::move(walk),
                   std::nullopt,
                   std::nullopt,
                   j.at("ground_truth").get<std::vector<std::string>>(),
                   meta.at("seed").get<std::uint64_t>(),
                   flags,
                   std::nullopt};
    if (j.contains("question")) {
      const auto rel = parse_relation(j["question"].at("relation").get<std::string>());
      if (!rel) throw format_error("unknown tree relation");
      t.tree = TreeQuestion{*rel, j["question"].at("anchor").get<NodeId>()};
    }
    if (j.contains("size")) {
      t.size = SizeQuestion{j["size"].at("height").get<int>(), j["size"].at("width").get<int>(),
                            j["size"].at("with_items").get<bool>()};
    }
    if (j.contains("prompt")) t.prompt = prompt_from_json(j["prompt"], flags);
    if (t.ground_truth.empty()) throw format_error("instance " + t.id + " has no ground truth");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("malformed instance: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::format) throw;
    throw format_error(std::string("malformed instance: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON-lines files

template <class T, class Encode>
void write_jsonl(const std::string& path, const std::vector<T>& items, Encode encode) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path + " for writing");
  for (const auto& item : items) out << encode(item).dump() << '\n';
  if (!out) throw io_error("write failed for " + path);
}

template <class Decode>
auto read_jsonl(const std::string& path, Decode decode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::vector<decltype(decode(nlohmann::json{}))> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw format_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(decode(j));
  }
  return out;
}

inline void write_instances(const std::string& path, const std::vector<TaskInstance>& items) {
  write_jsonl(path, items, [](const TaskInstance& t) { return to_json(t); });
}

inline std::vector<TaskInstance> read_instances(const std::string& path) {
  return read_jsonl(path, [](const nlohmann::json& j) { return instance_from_json(j); });
}

}  // namespace spatialnav
