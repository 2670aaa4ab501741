#pragma once

// Command-line front end: generate, run, analyze, make-pool, serve.

#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "spatialnav/analysis.hpp"
#include "spatialnav/harness.hpp"
#include "spatialnav/humanlab.hpp"
#include "spatialnav/logistic.hpp"
#include "spatialnav/render.hpp"
#include "spatialnav/server.hpp"
#include "spatialnav/taskgen.hpp"

#ifndef SPATIALNAV_DATA_DIR
#define SPATIALNAV_DATA_DIR "data"
#endif

namespace spatialnav {

inline constexpr std::string_view kVersion = "1.0.0";

inline std::string default_vocab_path() { return std::string(SPATIALNAV_DATA_DIR) + "/imagenet_labels.txt"; }

/// `spatialnav: error=<code> msg="<message>"` with quotes, backslashes and
/// control characters escaped so the line stays single.
inline std::string error_line(ErrorCode code, std::string_view message) {
  std::string msg;
  for (char c : message) {
    switch (c) {
      case '"': msg += "\\\""; break;
      case '\\': msg += "\\\\"; break;
      case '\n': msg += "\\n"; break;
      case '\r': msg += "\\r"; break;
      case '\t': msg += "\\t"; break;
      default: msg += c;
    }
  }
  return "spatialnav: error=" + std::string(to_string(code)) + " msg=\"" + msg + "\"";
}

namespace cli {

inline std::string utc_timestamp() {
  const auto now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_manifest(const std::string& out_path, const std::string& command, const nlohmann::json& config,
                           const nlohmann::json& seeds, const std::vector<std::string>& inputs) {
  const nlohmann::json m = {{"command", command},
                            {"config", config},
                            {"seeds", seeds},
                            {"inputs", inputs},
                            {"outputs", {out_path}},
                            {"version", std::string(kVersion)},
                            {"timestamp", utc_timestamp()}};
  std::ofstream f(out_path + ".manifest.json", std::ios::trunc);
  if (!f) throw io_error("cannot write manifest for " + out_path);
  f << m.dump(2) << '\n';
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw io_error("write failed for " + path);
}

template <class E, class Parse>
E enum_option(const std::string& value, Parse parse, std::string_view what) {
  const auto v = parse(value);
  if (!v) throw Error(ErrorCode::usage, "unknown " + std::string(what) + " '" + value + "'");
  return *v;
}

// --- generate --------------------------------------------------------------

struct GenerateArgs {
  std::string topology = "square";
  int rows = 3, cols = 3, size = 2, nodes = 12;
  std::string setting = "local";
  std::string task = "walk";  // walk | tree | size
  std::string order;
  int steps = 8;
  int count = 100;
  std::uint64_t seed = 0;
  std::string vocab = default_vocab_path();
  std::string relation = "cousin";
  bool no_items = false;
  bool detailed = false;
  int cot_shots = 0;
  std::string out;
};

inline GenerationRequest request_from(const GenerateArgs& a) {
  const auto kind = enum_option<TopologyKind>(a.topology, parse_topology_kind, "topology");
  GenerationRequest req;
  switch (kind) {
    case TopologyKind::square: req.topology = TopologyDescriptor::square(a.rows, a.cols); break;
    case TopologyKind::rhombus: req.topology = TopologyDescriptor::rhombus(a.rows, a.cols); break;
    case TopologyKind::hexagon: req.topology = TopologyDescriptor::hexagon(a.size); break;
    case TopologyKind::triangle: req.topology = TopologyDescriptor::triangle(a.size); break;
    case TopologyKind::ring: req.topology = TopologyDescriptor::ring(a.nodes); break;
    case TopologyKind::tree: req.topology = TopologyDescriptor::tree(a.nodes, 0); break;
  }
  try {
    req.topology.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::usage, e.what());
  }
  const auto setting = enum_option<Setting>(a.setting, parse_setting, "setting");
  if (a.task == "tree" || kind == TopologyKind::tree) {
    req.kind = TaskKind::tree_kinship;
    req.relation = enum_option<TreeRelation>(a.relation, parse_relation, "relation");
  } else if (a.task == "size") {
    req.kind = TaskKind::size_inference;
    req.with_items = !a.no_items;
  } else if (a.task == "walk") {
    req.kind = setting == Setting::local ? TaskKind::loop_closure_local : TaskKind::path_global;
  } else {
    throw Error(ErrorCode::usage, "unknown task '" + a.task + "' (walk, tree, size)");
  }
  if (!a.order.empty()) {
    req.order = enum_option<SerializationOrder>(a.order, parse_order, "order");
  } else if (req.kind == TaskKind::path_global) {
    req.order = kind == TopologyKind::ring ? SerializationOrder::ring_clockwise : SerializationOrder::row_major;
  } else if (req.kind == TaskKind::tree_kinship) {
    req.order = SerializationOrder::tree_dfs;
  }
  req.steps = a.steps;
  req.flags.detailed_description = a.detailed;
  req.flags.cot_shots = a.cot_shots;
  req.flags.coord_annotation = req.order == SerializationOrder::snake_coord;
  req.validate();
  return req;
}

inline void add_generate(CLI::App& app, GenerateArgs& a) {
  app.add_option("--topology", a.topology, "square, rhombus, hexagon, triangle, ring or tree");
  app.add_option("--rows", a.rows, "rows (square, rhombus; height for size inference)");
  app.add_option("--cols", a.cols, "columns (square, rhombus; width for size inference)");
  app.add_option("--size", a.size, "hexagon / triangle size");
  app.add_option("--nodes", a.nodes, "ring or tree node count");
  app.add_option("--setting", a.setting, "local or global");
  app.add_option("--task", a.task, "walk, tree or size");
  app.add_option("--order", a.order, "row_major, snake, snake_coord, random, ring_clockwise, tree_dfs, tree_bfs");
  app.add_option("--steps", a.steps, "navigation steps");
  app.add_option("--count", a.count, "number of instances");
  app.add_option("--seed", a.seed, "master seed");
  app.add_option("--vocab", a.vocab, "object vocabulary file");
  app.add_option("--relation", a.relation, "cousin, great_great_grandparent or great_great_grandchildren");
  app.add_flag("--no-items", a.no_items, "size inference with directions only");
  app.add_flag("--detailed", a.detailed, "prepend the structural description (hexagon, triangle)");
  app.add_option("--cot-shots", a.cot_shots, "worked examples before the question");
  app.add_option("--out", a.out, "output JSON-lines file")->required();
}

inline int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const auto req = request_from(a);
  const auto vocab = ObjectVocabulary::load(a.vocab);
  const auto instances = build_dataset(req, a.count, vocab, a.seed);
  write_instances(a.out, instances);
  write_manifest(a.out, "generate",
                 {{"topology", to_json(req.topology)},
                  {"task", to_string(req.kind)},
                  {"order", to_string(req.order)},
                  {"steps", req.steps},
                  {"relation", to_string(req.relation)},
                  {"with_items", req.with_items},
                  {"detailed_description", req.flags.detailed_description},
                  {"cot_shots", req.flags.cot_shots},
                  {"count", a.count}},
                 {{"master", a.seed}, {"derivation", "instance i: derive_seed(master, \"instance\", i)"}},
                 {a.vocab});
  out << "generated " << instances.size() << " instances -> " << a.out << '\n';
  return 0;
}

// --- run -------------------------------------------------------------------

struct RunArgs {
  std::string instances;
  std::string agent_config;
  std::string agent;
  std::optional<std::uint64_t> seed;
  std::optional<double> strength;
  std::optional<int> parallelism;
  std::string endpoint, model;
  int runs = 1;
  std::string out;
};

inline void add_run(CLI::App& app, RunArgs& a) {
  app.add_option("--instances", a.instances, "instance JSON-lines file")->required();
  app.add_option("--agent-config", a.agent_config, "agent config JSON file");
  app.add_option("--agent", a.agent, "agent kind (overrides config)");
  app.add_option("--seed", a.seed, "agent seed (overrides config)");
  app.add_option("--strength", a.strength, "bias strength in [0, 1] (overrides config)");
  app.add_option("--parallelism", a.parallelism, "concurrent remote requests (overrides config)");
  app.add_option("--endpoint", a.endpoint, "chat completions URL (overrides config)");
  app.add_option("--model", a.model, "model name (overrides config)");
  app.add_option("--runs", a.runs, "complete passes over the instances");
  app.add_option("--out", a.out, "output eval-record JSON-lines file")->required();
}

inline AgentConfig resolve_agent(const RunArgs& a) {
  nlohmann::json j = nlohmann::json::object();
  if (!a.agent_config.empty()) {
    std::ifstream f(a.agent_config);
    if (!f) throw io_error("cannot open agent config " + a.agent_config);
    try {
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
      throw config_error("agent config " + a.agent_config + " is not JSON: " + e.what());
    }
  }
  if (!a.agent.empty()) j["kind"] = a.agent;
  if (a.seed) j["seed"] = *a.seed;
  if (a.strength) j["strength"] = *a.strength;
  if (a.parallelism) j["parallelism"] = *a.parallelism;
  if (!a.endpoint.empty()) j["endpoint"] = a.endpoint;
  if (!a.model.empty()) j["model"] = a.model;
  return agent_config_from_json(j);
}

inline int cmd_run(const RunArgs& a, std::ostream& out) {
  const auto cfg = resolve_agent(a);
  const auto instances = read_instances(a.instances);
  const auto records = run_agent(cfg, instances, a.runs);
  write_records(a.out, records);
  auto cfg_json = to_json(cfg);
  write_manifest(a.out, "run", {{"agent", cfg_json}, {"runs", a.runs}},
                 {{"agent", cfg.seed}, {"derivation", "run r, instance i: derive_seed(derive_seed(seed, \"agent-run\", r), \"instance\", i)"}},
                 {a.instances});
  std::size_t correct = 0, errors = 0;
  for (const auto& r : records) {
    correct += r.correct ? 1 : 0;
    errors += r.error ? 1 : 0;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "accuracy=%.6f records=%zu runs=%d errors=%zu",
                records.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(records.size()),
                records.size(), a.runs, errors);
  out << buf << '\n';
  return 0;
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  std::string kind;
  std::string instances;
  std::string evals;
  std::string out;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::string setting;
  std::string distance;
  int sd = 1;
  std::string group_by = "agent,topology,setting";
};

inline void add_analyze(CLI::App& app, AnalyzeArgs& a) {
  app.add_option("--kind", a.kind, "hist, baseline, conditional, axis, regression or score")->required();
  app.add_option("--instances", a.instances, "instance JSON-lines file");
  app.add_option("--evals", a.evals, "eval-record JSON-lines file");
  app.add_option("--out", a.out, "output CSV file")->required();
  app.add_option("--samples", a.samples, "baseline Monte-Carlo samples");
  app.add_option("--seed", a.seed, "baseline seed");
  app.add_option("--setting", a.setting, "baseline sampling scheme: local or global (default: from instances)");
  app.add_option("--distance", a.distance, "spatial or temporal (default: both)");
  app.add_option("--sd", a.sd, "spatial distance to condition on");
  app.add_option("--group-by", a.group_by, "comma-separated score keys: agent, topology, map, task, setting, order, steps");
}

inline std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  static const std::set<std::string> kinds = {"hist", "baseline", "conditional", "axis", "regression", "score"};
  if (!kinds.count(a.kind)) throw Error(ErrorCode::usage, "unknown analysis kind '" + a.kind + "'");
  const bool needs_instances = a.kind != "score";
  const bool needs_evals = a.kind != "baseline";
  if (needs_instances && a.instances.empty()) throw Error(ErrorCode::usage, a.kind + " needs --instances");
  if (needs_evals && a.evals.empty()) throw Error(ErrorCode::usage, a.kind + " needs --evals");
  std::vector<TaskInstance> instances;
  std::vector<EvalRecord> records;
  if (needs_instances) instances = read_instances(a.instances);
  if (needs_evals) records = read_records(a.evals);

  std::vector<DistanceKind> distances;
  if (a.distance.empty()) {
    distances = {DistanceKind::spatial, DistanceKind::temporal};
  } else {
    distances = {enum_option<DistanceKind>(a.distance, parse_distance_kind, "distance kind")};
  }
  const auto with_kind = [](std::ostringstream& os, std::string_view kind, const Histogram& h) {
    const double n = static_cast<double>(total(h));
    for (const auto& [d, c] : h) {
      os << kind << ',' << d << ',' << c << ',' << detail::num(n > 0 ? static_cast<double>(c) / n : 0.0) << '\n';
    }
  };

  std::ostringstream csv;
  nlohmann::json extra = nlohmann::json::object();
  if (a.kind == "hist") {
    const auto es = build_error_records(instances, records);
    if (es.errors.empty()) err << "spatialnav: warning: no wrong predictions; histogram is empty\n";
    csv << "kind,distance,count,fraction\n";
    for (auto k : distances) with_kind(csv, to_string(k), histogram(es.errors, k));
    extra = {{"wrong", es.wrong}, {"no_answer", es.no_answer}, {"off_map", es.off_map}, {"skipped", es.skipped}};
    out << "errors=" << es.errors.size() << " off_map=" << es.off_map << " no_answer=" << es.no_answer << '\n';
  } else if (a.kind == "baseline") {
    if (instances.empty()) throw analysis_error("baseline needs at least one instance");
    const auto setting = a.setting.empty() ? instances.front().setting()
                                           : enum_option<Setting>(a.setting, parse_setting, "setting");
    csv << "kind,distance,count,fraction\n";
    for (auto k : distances) {
      const auto b = baseline(instances, setting, k, a.samples, derive_seed(a.seed, "baseline", static_cast<std::uint64_t>(k)));
      with_kind(csv, to_string(k), b.histogram);
    }
  } else if (a.kind == "conditional") {
    const auto es = build_error_records(instances, records);
    const auto h = conditional_td(es.errors, a.sd);
    if (h.empty()) err << "spatialnav: warning: no errors at spatial distance " << a.sd << '\n';
    write_histogram_csv(csv, h, "temporal_distance");
  } else if (a.kind == "axis") {
    const auto es = build_error_records(instances, records);
    const auto h = axis_histograms(es.errors);
    if (h.rows.empty()) err << "spatialnav: warning: no square-grid errors; histogram is empty\n";
    csv << "axis,delta,count,fraction\n";
    with_kind(csv, "row", h.rows);
    with_kind(csv, "column", h.cols);
  } else if (a.kind == "regression") {
    std::vector<DifficultyRow> rows;
    const auto skipped = difficulty_rows(instances, records, rows);
    if (skipped) err << "spatialnav: warning: skipped " << skipped << " records outside the model\n";
    const auto fit = fit_difficulty(rows);
    write_regression_csv(csv, fit);
    extra = {{"log_likelihood", fit.log_likelihood}, {"iterations", fit.iterations}, {"rows", rows.size()}};
    out << "iterations=" << fit.iterations << " log_likelihood=" << detail::num(fit.log_likelihood) << '\n';
  } else {
    const auto keys = split_csv_list(a.group_by);
    write_score_csv(csv, score(records, keys), keys);
  }
  write_text(a.out, csv.str());
  std::vector<std::string> inputs;
  if (needs_instances) inputs.push_back(a.instances);
  if (needs_evals) inputs.push_back(a.evals);
  write_manifest(a.out, "analyze",
                 {{"kind", a.kind},
                  {"samples", a.samples},
                  {"setting", a.setting},
                  {"distance", a.distance},
                  {"sd", a.sd},
                  {"group_by", a.group_by},
                  {"summary", extra}},
                 {{"baseline", a.seed}}, inputs);
  return 0;
}

// --- make-pool / serve -----------------------------------------------------

struct PoolArgs {
  std::string vocab = default_vocab_path();
  std::uint64_t seed = 0;
  int attention = 5;
  std::string out;
};

inline int cmd_make_pool(const PoolArgs& a, std::ostream& out) {
  if (a.attention < 1) throw Error(ErrorCode::usage, "need at least one attention check per structure");
  const auto pool = build_pool(ObjectVocabulary::load(a.vocab), a.seed, a.attention);
  write_text(a.out, to_json(pool).dump(2) + "\n");
  write_manifest(a.out, "make-pool", {{"attention_per_structure", a.attention}}, {{"master", a.seed}}, {a.vocab});
  out << "pool: " << pool.regular.size() << " regular, " << pool.attention.size() << " attention -> " << a.out << '\n';
  return 0;
}

struct ServeArgs {
  std::string pool;
  std::string log = "humanlab-events.jsonl";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string criterion = "max_one_attention_error";
  std::string static_dir;
  std::uint64_t seed = 0;
};

inline HumanlabServer*& active_server() {
  static HumanlabServer* s = nullptr;
  return s;
}

inline int cmd_serve(const ServeArgs& a, std::ostream& out) {
  ServerOptions opt;
  opt.host = a.host;
  opt.port = a.port;
  opt.default_criterion = enum_option<ExclusionCriterion>(a.criterion, parse_criterion, "criterion");
  if (!a.static_dir.empty()) opt.static_dir = a.static_dir;
  SessionStore store(load_pool(a.pool), a.log, a.seed);
  HumanlabServer server(store, opt);
  const int port = server.bind();
  out << "serving on http://" << a.host << ':' << port << " (log " << a.log << ")" << std::endl;
  active_server() = &server;
  std::signal(SIGINT, [](int) {
    if (active_server()) active_server()->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (active_server()) active_server()->stop();
  });
  server.listen();
  active_server() = nullptr;
  return 0;
}

}  // namespace cli

/// Entry point shared by the executable and the tests. Returns the exit status.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Spatial-navigation task generator, evaluation harness and analysis toolkit", "spatialnav"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  cli::GenerateArgs gen;
  cli::RunArgs run;
  cli::AnalyzeArgs ana;
  cli::PoolArgs pool;
  cli::ServeArgs serve;
  auto* g = app.add_subcommand("generate", "generate task instances");
  cli::add_generate(*g, gen);
  auto* r = app.add_subcommand("run", "run an agent over instances");
  cli::add_run(*r, run);
  auto* an = app.add_subcommand("analyze", "error analysis, baselines, regression and scoring");
  cli::add_analyze(*an, ana);
  auto* mp = app.add_subcommand("make-pool", "build the human-study question pool");
  mp->add_option("--vocab", pool.vocab, "object vocabulary file");
  mp->add_option("--seed", pool.seed, "master seed");
  mp->add_option("--attention", pool.attention, "attention checks per structure");
  mp->add_option("--out", pool.out, "output pool JSON")->required();
  auto* sv = app.add_subcommand("serve", "run the human-study HTTP service");
  sv->add_option("--pool", serve.pool, "pool JSON from make-pool")->required();
  sv->add_option("--log", serve.log, "append-only event log");
  sv->add_option("--host", serve.host, "bind address");
  sv->add_option("--port", serve.port, "port");
  sv->add_option("--criterion", serve.criterion, "default exclusion criterion");
  sv->add_option("--static-dir", serve.static_dir, "survey UI bundle to serve at /");
  sv->add_option("--seed", serve.seed, "session seed");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(std::move(rev));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_line(ErrorCode::usage, e.what()) << '\n';
    return exit_status(ErrorCode::usage);
  }
  try {
    if (*g) return cli::cmd_generate(gen, out);
    if (*r) return cli::cmd_run(run, out);
    if (*an) return cli::cmd_analyze(ana, out, err);
    if (*mp) return cli::cmd_make_pool(pool, out);
    return cli::cmd_serve(serve, out);
  } catch (const Error& e) {
    err << error_line(e.code(), e.what()) << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    err << error_line(ErrorCode::io, e.what()) << '\n';
    return exit_status(ErrorCode::io);
  }
}

}  // namespace spatialnav
