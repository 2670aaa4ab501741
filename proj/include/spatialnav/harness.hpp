#pragma once

// Agents, answer extraction and scoring.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "spatialnav/errors.hpp"
#include "spatialnav/instance.hpp"
#include "spatialnav/metrics.hpp"
#include "spatialnav/random.hpp"
#include "spatialnav/render.hpp"

namespace spatialnav {

// ---------------------------------------------------------------------------
// Answer extraction

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

inline constexpr std::string_view kAnswerKeyword = "Answer:";

/// Elements after the last "Answer:", split on ",", trimmed and lowercased,
/// in order of appearance. Empty elements are dropped. No keyword gives {}.
inline std::vector<std::string> extract_answer_list(std::string_view raw) {
  const auto at = raw.rfind(kAnswerKeyword);
  if (at == std::string_view::npos) return {};
  const auto tail = raw.substr(at + kAnswerKeyword.size());
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= tail.size()) {
    auto end = tail.find(',', start);
    if (end == std::string_view::npos) end = tail.size();
    auto item = detail::lower(detail::trim(tail.substr(start, end - start)));
    if (!item.empty()) out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

inline std::set<std::string> extract_answer(std::string_view raw) {
  const auto items = extract_answer_list(raw);
  return {items.begin(), items.end()};
}

/// First run of digits in s, if any.
inline std::optional<std::string> first_integer(std::string_view s) {
  const auto b = std::find_if(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  if (b == s.end()) return std::nullopt;
  const auto e = std::find_if(b, s.end(), [](char c) { return !std::isdigit(static_cast<unsigned char>(c)); });
  auto digits = std::string(b, e);
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
  return digits;
}

/// Extracted answer in the form compared against ground truth. Size
/// inference is ordered (height, width); every other kind is a set.
inline std::vector<std::string> extracted_for(const TaskInstance& t, std::string_view raw) {
  if (t.kind == TaskKind::size_inference) {
    std::vector<std::string> out;
    for (const auto& item : extract_answer_list(raw)) {
      if (auto n = first_integer(item)) out.push_back(*n);
    }
    return out;
  }
  const auto s = extract_answer(raw);
  return {s.begin(), s.end()};
}

inline bool is_correct(const TaskInstance& t, const std::vector<std::string>& extracted) {
  if (t.kind == TaskKind::size_inference) return extracted == t.ground_truth;
  const std::set<std::string> truth(t.ground_truth.begin(), t.ground_truth.end());
  return std::set<std::string>(extracted.begin(), extracted.end()) == truth;
}

inline std::string format_answer(const std::vector<std::string>& items) {
  std::string out(kAnswerKeyword);
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : " ") + items[i];
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class AgentKind { remote_chat, oracle, uniform_random, temporal_biased, spatial_biased, start_biased };

inline constexpr std::array kAllAgentKinds = {AgentKind::remote_chat,     AgentKind::oracle,
                                              AgentKind::uniform_random,  AgentKind::temporal_biased,
                                              AgentKind::spatial_biased,  AgentKind::start_biased};

constexpr std::string_view to_string(AgentKind k) noexcept {
  switch (k) {
    case AgentKind::remote_chat: return "remote_chat";
    case AgentKind::oracle: return "oracle";
    case AgentKind::uniform_random: return "uniform_random";
    case AgentKind::temporal_biased: return "temporal_biased";
    case AgentKind::spatial_biased: return "spatial_biased";
    case AgentKind::start_biased: return "start_biased";
  }
  return "?";
}

inline std::optional<AgentKind> parse_agent_kind(std::string_view s) {
  for (auto k : kAllAgentKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct DecodingParams {
  double temperature = 1.0;
  double top_p = 1.0;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;
};

struct AgentConfig {
  AgentKind kind = AgentKind::oracle;
  std::string name;  // label used in records; defaults to the kind or model

  // remote_chat
  std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
  std::string model;
  DecodingParams decoding;
  std::string token_env = "OPENAI_API_KEY";  // empty: no Authorization header
  std::string response_pointer = "/choices/0/message/content";
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int retry_backoff_ms = 500;
  int parallelism = 4;

  // reference agents
  std::uint64_t seed = 0;
  double strength = 1.0;

  std::string display_name() const {
    if (!name.empty()) return name;
    if (kind == AgentKind::remote_chat && !model.empty()) return model;
    return std::string(to_string(kind));
  }

  void validate() const {
    if (strength < 0.0 || strength > 1.0) throw config_error("agent strength must lie in [0, 1]");
    if (kind != AgentKind::remote_chat) return;
    if (endpoint.empty()) throw config_error("remote_chat agent needs an endpoint");
    if (model.empty()) throw config_error("remote_chat agent needs a model name");
    if (max_retries < 0) throw config_error("max_retries must be >= 0");
    if (parallelism < 1) throw config_error("parallelism must be >= 1");
    if (timeout_seconds <= 0) throw config_error("timeout must be positive");
    try {
      (void)nlohmann::json::json_pointer(response_pointer);
    } catch (const nlohmann::json::exception& e) {
      throw config_error("bad response_pointer '" + response_pointer + "': " + e.what());
    }
  }
};

inline nlohmann::json to_json(const AgentConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"name", c.name},
          {"endpoint", c.endpoint},
          {"model", c.model},
          {"decoding",
           {{"temperature", c.decoding.temperature},
            {"top_p", c.decoding.top_p},
            {"frequency_penalty", c.decoding.frequency_penalty},
            {"presence_penalty", c.decoding.presence_penalty}}},
          {"token_env", c.token_env},
          {"response_pointer", c.response_pointer},
          {"timeout_seconds", c.timeout_seconds},
          {"max_retries", c.max_retries},
          {"retry_backoff_ms", c.retry_backoff_ms},
          {"parallelism", c.parallelism},
          {"seed", c.seed},
          {"strength", c.strength}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline AgentConfig agent_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "kind",           "name",      "endpoint",    "model",           "decoding",
      "token_env",      "response_pointer", "timeout_seconds", "max_retries", "retry_backoff_ms",
      "parallelism",    "seed",      "strength"};
  if (!j.is_object()) throw config_error("agent config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw config_error("unknown agent config key '" + key + "'");
  }
  AgentConfig c;
  try {
    if (j.contains("kind")) {
      const auto k = parse_agent_kind(j["kind"].get<std::string>());
      if (!k) throw config_error("unknown agent kind '" + j["kind"].get<std::string>() + "'");
      c.kind = *k;
    }
    const auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("name", c.name);
    get("endpoint", c.endpoint);
    get("model", c.model);
    get("token_env", c.token_env);
    get("response_pointer", c.response_pointer);
    get("timeout_seconds", c.timeout_seconds);
    get("max_retries", c.max_retries);
    get("retry_backoff_ms", c.retry_backoff_ms);
    get("parallelism", c.parallelism);
    get("seed", c.seed);
    get("strength", c.strength);
    if (j.contains("decoding")) {
      const auto& d = j["decoding"];
      for (const auto& [key, _] : d.items()) {
        if (key != "temperature" && key != "top_p" && key != "frequency_penalty" && key != "presence_penalty") {
          throw config_error("unknown decoding key '" + key + "'");
        }
      }
      if (d.contains("temperature")) c.decoding.temperature = d["temperature"].get<double>();
      if (d.contains("top_p")) c.decoding.top_p = d["top_p"].get<double>();
      if (d.contains("frequency_penalty")) c.decoding.frequency_penalty = d["frequency_penalty"].get<double>();
      if (d.contains("presence_penalty")) c.decoding.presence_penalty = d["presence_penalty"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("agent config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Records

struct EvalRecord {
  std::string instance_id;
  int run = 0;
  std::string agent;
  std::string raw;
  std::vector<std::string> extracted;
  bool correct = false;
  double latency_ms = 0.0;
  std::optional<std::string> error;
  // Copied from the instance so records can be grouped on their own.
  std::string topology;   // kind, e.g. "square"
  std::string map;        // descriptor tag, e.g. "square-3x3"
  std::string task;       // task kind
  std::string setting;
  std::string order;
  int steps = 0;
};

inline nlohmann::json to_json(const EvalRecord& r) {
  nlohmann::json j = {{"version", 1},
                      {"instance_id", r.instance_id},
                      {"run", r.run},
                      {"agent", r.agent},
                      {"raw", r.raw},
                      {"extracted", r.extracted},
                      {"correct", r.correct},
                      {"latency_ms", r.latency_ms},
                      {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr)},
                      {"topology", r.topology},
                      {"map", r.map},
                      {"task", r.task},
                      {"setting", r.setting},
                      {"order", r.order},
                      {"steps", r.steps}};
  return j;
}

inline EvalRecord eval_record_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw format_error("unsupported eval record version");
    EvalRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.run = j.at("run").get<int>();
    r.agent = j.at("agent").get<std::string>();
    r.raw = j.at("raw").get<std::string>();
    r.extracted = j.at("extracted").get<std::vector<std::string>>();
    r.correct = j.at("correct").get<bool>();
    r.latency_ms = j.at("latency_ms").get<double>();
    if (!j.at("error").is_null()) r.error = j["error"].get<std::string>();
    r.topology = j.at("topology").get<std::string>();
    r.map = j.at("map").get<std::string>();
    r.task = j.at("task").get<std::string>();
    r.setting = j.at("setting").get<std::string>();
    r.order = j.at("order").get<std::string>();
    r.steps = j.at("steps").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("malformed eval record: ") + e.what());
  }
}

inline void write_records(const std::string& path, const std::vector<EvalRecord>& records) {
  write_jsonl(path, records, [](const EvalRecord& r) { return to_json(r); });
}

inline std::vector<EvalRecord> read_records(const std::string& path) {
  return read_jsonl(path, [](const nlohmann::json& j) { return eval_record_from_json(j); });
}

inline EvalRecord make_record(const TaskInstance& t, int run, const std::string& agent, std::string raw) {
  EvalRecord r;
  r.instance_id = t.id;
  r.run = run;
  r.agent = agent;
  r.extracted = extracted_for(t, raw);
  r.correct = is_correct(t, r.extracted);
  r.raw = std::move(raw);
  r.topology = std::string(to_string(t.topology()));
  r.map = t.world.map().descriptor().tag();
  r.task = std::string(to_string(t.kind));
  r.setting = std::string(to_string(t.setting()));
  r.order = std::string(to_string(t.order));
  r.steps = t.navigation_steps();
  return r;
}

// ---------------------------------------------------------------------------
// Reference agents

/// Answers a reference agent may give, each as the item list after "Answer:".
/// Local walks: the distinct labels mentioned. Global and tree: every map
/// label. Size inference: every (height, width) factorisation of the cell count.
inline std::vector<std::vector<std::string>> answer_candidates(const TaskInstance& t) {
  std::vector<std::vector<std::string>> out;
  if (t.kind == TaskKind::size_inference) {
    const int cells = static_cast<int>(t.walk.steps.size()) + 1;
    for (int h = 2; h <= cells / 2; ++h) {
      if (cells % h == 0) out.push_back({std::to_string(h), std::to_string(cells / h)});
    }
    return out;
  }
  std::vector<std::string> labels;
  if (t.kind == TaskKind::loop_closure_local) {
    labels = mention_sequence(t);
  } else {
    labels = t.world.labels();
  }
  std::set<std::string> seen;
  for (auto& l : labels) {
    if (seen.insert(l).second) out.push_back({l});
  }
  return out;
}

namespace detail {

/// Bias score of a single-label candidate; lower is preferred.
inline std::optional<int> bias_score(AgentKind kind, const TaskInstance& t,
                                     const std::vector<std::string>& mentions, const std::string& label) {
  switch (kind) {
    case AgentKind::temporal_biased:
      return temporal_distance(mentions, t.ground_truth.front(), label);
    case AgentKind::spatial_biased:
      return spatial_distance(t, label, mentions);
    case AgentKind::start_biased:
      return label == t.world.label(t.walk.start) ? 0 : 1;
    default:
      return std::nullopt;
  }
}

}  // namespace detail

/// Deterministic response of a reference agent for one instance.
inline std::string reference_response(const AgentConfig& cfg, const TaskInstance& t, std::uint64_t seed) {
  if (cfg.kind == AgentKind::oracle) return format_answer(t.ground_truth);
  Rng rng(seed);
  const auto candidates = answer_candidates(t);
  if (candidates.empty()) return format_answer({});
  if (cfg.kind == AgentKind::uniform_random) return format_answer(rng.pick(candidates));

  std::vector<const std::vector<std::string>*> wrong;
  for (const auto& c : candidates) {
    if (!is_correct(t, c)) wrong.push_back(&c);
  }
  if (wrong.empty()) return format_answer(rng.pick(candidates));
  const bool scored = t.kind == TaskKind::loop_closure_local || t.kind == TaskKind::path_global;
  if (scored && rng.bernoulli(cfg.strength)) {
    const auto mentions = mention_sequence(t);
    std::vector<const std::vector<std::string>*> best;
    int best_score = 0;
    for (const auto* c : wrong) {
      const auto s = detail::bias_score(cfg.kind, t, mentions, c->front());
      if (!s) continue;
      if (best.empty() || *s < best_score) {
        best = {c};
        best_score = *s;
      } else if (*s == best_score) {
        best.push_back(c);
      }
    }
    if (!best.empty()) return format_answer(*rng.pick(best));
  }
  return format_answer(*rng.pick(wrong));
}

// ---------------------------------------------------------------------------
// Remote chat agent

struct Endpoint {
  std::string scheme_host_port;  // "https://host:443"
  std::string path;              // "/v1/chat/completions"
};

inline Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw config_error("endpoint '" + url + "' has no scheme");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw config_error("endpoint scheme must be http or https");
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.scheme_host_port = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (e.scheme_host_port.size() <= scheme_end + 3) throw config_error("endpoint '" + url + "' has no host");
  return e;
}

inline nlohmann::json chat_request_body(const AgentConfig& cfg, const PromptBundle& prompt) {
  return {{"model", cfg.model},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", prompt.system_prompt}},
                                  {{"role", "user"}, {"content", prompt.user_prompt}}})},
          {"temperature", cfg.decoding.temperature},
          {"top_p", cfg.decoding.top_p},
          {"frequency_penalty", cfg.decoding.frequency_penalty},
          {"presence_penalty", cfg.decoding.presence_penalty},
          {"n", 1},
          {"stream", false}};
}

struct ChatResult {
  std::string text;
  std::optional<std::string> error;
  int attempts = 0;
};

/// One chat completion with retries on transport errors, 408, 429 and 5xx.
class ChatClient {
 public:
  explicit ChatClient(AgentConfig cfg) : cfg_(std::move(cfg)), endpoint_(parse_endpoint(cfg_.endpoint)) {
    cfg_.validate();
    if (!cfg_.token_env.empty()) {
      const char* token = std::getenv(cfg_.token_env.c_str());
      if (!token || !*token) {
        throw config_error("environment variable " + cfg_.token_env + " holding the API token is not set");
      }
      token_ = token;
    }
  }

  ChatResult complete(const PromptBundle& prompt) const {
    httplib::Client client(endpoint_.scheme_host_port);
    const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
    const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    const auto body = chat_request_body(cfg_, prompt).dump();

    ChatResult result;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.retry_backoff_ms << std::min(attempt - 1, 6)));
      }
      result.attempts = attempt + 1;
      auto res = client.Post(endpoint_.path, headers, body, "application/json");
      if (!res) {
        last_error = "transport: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "http " + std::to_string(res->status);
        const bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
        if (retryable) continue;
        break;
      }
      try {
        const auto j = nlohmann::json::parse(res->body);
        result.text = j.at(nlohmann::json::json_pointer(cfg_.response_pointer)).get<std::string>();
        result.error.reset();
        return result;
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("bad response body: ") + e.what();
      }
    }
    result.text.clear();
    result.error = last_error;
    return result;
  }

  const AgentConfig& config() const noexcept { return cfg_; }

 private:
  AgentConfig cfg_;
  Endpoint endpoint_;
  std::string token_;
};

// ---------------------------------------------------------------------------
// Running

inline const PromptBundle& prompt_of(const TaskInstance& t, std::optional<PromptBundle>& scratch) {
  if (t.prompt) return *t.prompt;
  scratch = render_zero_shot(t);
  return *scratch;
}

/// runs × instances records, ordered by run then instance. Reference agents
/// are deterministic in (config.seed, run, instance index).
inline std::vector<EvalRecord> run_agent(const AgentConfig& cfg, const std::vector<TaskInstance>& instances,
                                         int runs) {
  cfg.validate();
  if (runs < 1) throw Error(ErrorCode::usage, "runs must be >= 1");
  const auto agent = cfg.display_name();
  std::vector<EvalRecord> out;
  out.reserve(instances.size() * static_cast<std::size_t>(runs));

  if (cfg.kind != AgentKind::remote_chat) {
    for (int r = 0; r < runs; ++r) {
      const auto run_seed = derive_seed(cfg.seed, "agent-run", static_cast<std::uint64_t>(r));
      for (std::size_t i = 0; i < instances.size(); ++i) {
        out.push_back(make_record(instances[i], r, agent,
                                  reference_response(cfg, instances[i], derive_seed(run_seed, "instance", i))));
      }
    }
    return out;
  }

  const ChatClient client(cfg);
  const std::size_t total = instances.size() * static_cast<std::size_t>(runs);
  std::vector<std::optional<EvalRecord>> slots(total);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const auto& t = instances[k % instances.size()];
      const int run = static_cast<int>(k / instances.size());
      std::optional<PromptBundle> scratch;
      const auto start = std::chrono::steady_clock::now();
      auto res = client.complete(prompt_of(t, scratch));
      const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
      auto rec = make_record(t, run, agent, std::move(res.text));
      rec.latency_ms = elapsed.count();
      rec.error = std::move(res.error);
      if (rec.error) rec.correct = false;
      slots[k] = std::move(rec);
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism), std::max<std::size_t>(total, 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Scoring

inline constexpr std::array<std::string_view, 7> kGroupKeys = {"agent", "topology", "map", "task",
                                                               "setting", "order", "steps"};

inline std::string group_value(const EvalRecord& r, std::string_view key) {
  if (key == "agent") return r.agent;
  if (key == "topology") return r.topology;
  if (key == "map") return r.map;
  if (key == "task") return r.task;
  if (key == "setting") return r.setting;
  if (key == "order") return r.order;
  if (key == "steps") return std::to_string(r.steps);
  throw Error(ErrorCode::usage, "unknown group key '" + std::string(key) + "'");
}

struct ScoreRow {
  std::vector<std::string> group;
  std::size_t n = 0;                 // records in the group
  std::vector<double> run_means;     // indexed by run, runs present only
  double mean = 0.0;                 // mean of run means
  double se = 0.0;                   // sample std of run means / sqrt(runs)
  double ci95() const { return 1.96 * se; }
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Standard error across run means; 0 for a single run.
inline double standard_error(const std::vector<double>& run_means) {
  const auto k = run_means.size();
  if (k < 2) return 0.0;
  const double m = mean_of(run_means);
  double ss = 0;
  for (double x : run_means) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(k - 1)) / std::sqrt(static_cast<double>(k));
}

inline std::vector<ScoreRow> score(const std::vector<EvalRecord>& records,
                                   const std::vector<std::string>& group_keys) {
  if (records.empty()) throw analysis_error("no records to score");
  for (const auto& k : group_keys) (void)group_value(records.front(), k);
  std::map<std::vector<std::string>, std::map<int, std::pair<std::size_t, std::size_t>>> acc;
  for (const auto& r : records) {
    std::vector<std::string> g;
    for (const auto& k : group_keys) g.push_back(group_value(r, k));
    auto& cell = acc[g][r.run];
    cell.first += r.correct ? 1 : 0;
    cell.second += 1;
  }
  std::vector<ScoreRow> out;
  for (const auto& [g, runs] : acc) {
    ScoreRow row;
    row.group = g;
    for (const auto& [run, c] : runs) {
      row.n += c.second;
      row.run_means.push_back(static_cast<double>(c.first) / static_cast<double>(c.second));
    }
    row.mean = mean_of(row.run_means);
    row.se = standard_error(row.run_means);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace spatialnav
