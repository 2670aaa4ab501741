#include <gtest/gtest.h>

#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include "oracles/answer_cases.hpp"
#include "oracles/graph_oracles.hpp"
#include "spatialnav/harness.hpp"
#include "support.hpp"

using namespace spatialnav;
using testsupport::vocab;

namespace {

std::vector<TaskInstance> local_square(int count, std::uint64_t seed, int steps = 8) {
  GenerationRequest req;
  req.steps = steps;
  return build_dataset(req, count, vocab(), seed);
}

double accuracy(const std::vector<EvalRecord>& rs) {
  double c = 0;
  for (const auto& r : rs) c += r.correct;
  return c / static_cast<double>(rs.size());
}

AgentConfig reference(AgentKind k, std::uint64_t seed = 1, double strength = 1.0) {
  AgentConfig c;
  c.kind = k;
  c.seed = seed;
  c.strength = strength;
  return c;
}

/// Chat endpoint on a loopback port; the handler decides each reply.
class MockChat {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&, int call)>;

  explicit MockChat(Handler h) : handler_(std::move(h)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      int call;
      {
        std::lock_guard lock(mu_);
        call = calls_++;
        bodies_.push_back(nlohmann::json::parse(req.body));
        auth_.push_back(req.get_header_value("Authorization"));
      }
      handler_(req, res, call);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockChat() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int calls() {
    std::lock_guard lock(mu_);
    return calls_;
  }
  std::vector<nlohmann::json> bodies() {
    std::lock_guard lock(mu_);
    return bodies_;
  }
  std::vector<std::string> auth() {
    std::lock_guard lock(mu_);
    return auth_;
  }

  static void reply(httplib::Response& res, const std::string& content) {
    res.set_content(nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                    "application/json");
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  int calls_ = 0;
  std::vector<nlohmann::json> bodies_;
  std::vector<std::string> auth_;
};

AgentConfig remote(const std::string& url) {
  AgentConfig c;
  c.kind = AgentKind::remote_chat;
  c.endpoint = url;
  c.model = "test-model";
  c.token_env = "SPATIALNAV_TEST_TOKEN";
  c.retry_backoff_ms = 1;
  c.timeout_seconds = 5;
  return c;
}

struct TokenEnv {
  TokenEnv() { ::setenv("SPATIALNAV_TEST_TOKEN", "tok-123", 1); }
  ~TokenEnv() { ::unsetenv("SPATIALNAV_TEST_TOKEN"); }
};

}  // namespace

// --- extraction -------------------------------------------------------------

TEST(Extract, GoldenSuite) {
  ASSERT_EQ(oracle::answer_cases().size(), 20u);
  for (const auto& c : oracle::answer_cases()) EXPECT_EQ(extract_answer(c.raw), c.expected) << c.raw;
}

TEST(Extract, IdempotentOnOwnRendering) {
  for (const auto& c : oracle::answer_cases()) {
    const auto once = extract_answer(c.raw);
    const auto again = extract_answer(format_answer({once.begin(), once.end()}));
    EXPECT_EQ(once, again) << c.raw;
  }
  Rng rng(5);
  const std::string alphabet = "ab ,:AnswerX\n";
  for (int i = 0; i < 2000; ++i) {
    std::string raw;
    const auto len = rng.below(40);
    for (std::size_t k = 0; k < len; ++k) raw += alphabet[rng.below(alphabet.size())];
    if (rng.bernoulli(0.5)) raw += "Answer:" + raw;
    const auto once = extract_answer(raw);
    EXPECT_EQ(extract_answer(format_answer({once.begin(), once.end()})), once) << raw;
  }
}

TEST(Extract, SizeInferenceIsOrdered) {
  GenerationRequest req;
  req.topology = TopologyDescriptor::square(2, 12);
  req.kind = TaskKind::size_inference;
  const auto t = generate_instance(req, vocab(), 1, "s");
  EXPECT_TRUE(is_correct(t, extracted_for(t, "Answer: 2, 12")));
  EXPECT_TRUE(is_correct(t, extracted_for(t, "Answer: height 2, width 12")));
  EXPECT_FALSE(is_correct(t, extracted_for(t, "Answer: 12, 2")));
  EXPECT_FALSE(is_correct(t, extracted_for(t, "Answer: 2")));
  EXPECT_FALSE(is_correct(t, extracted_for(t, "Answer: 2, 12, 2")));
  EXPECT_EQ(first_integer("007 rows"), "7");
  EXPECT_EQ(first_integer("none"), std::nullopt);
}

TEST(Extract, CorrectnessIsExactSetEquality) {
  GenerationRequest req;
  req.topology = TopologyDescriptor::tree(9, 0);
  req.kind = TaskKind::tree_kinship;
  req.order = SerializationOrder::tree_dfs;
  req.relation = TreeRelation::great_great_grandchildren;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto t = generate_instance(req, vocab(), seed, "t");
    if (t.ground_truth.size() < 2) continue;
    std::vector<std::string> rev(t.ground_truth.rbegin(), t.ground_truth.rend());
    EXPECT_TRUE(is_correct(t, extracted_for(t, format_answer(rev))));
    EXPECT_FALSE(is_correct(t, extracted_for(t, format_answer({t.ground_truth.front()}))));
    auto extra = t.ground_truth;
    extra.push_back(t.world.label(t.tree->anchor));
    EXPECT_FALSE(is_correct(t, extracted_for(t, format_answer(extra))));
    return;
  }
  FAIL() << "no multi-answer tree question found";
}

// --- reference agents -----------------------------------------------------

TEST(Agents, OracleScoresOne) {
  auto instances = local_square(50, 1);
  GenerationRequest size;
  size.topology = TopologyDescriptor::square(3, 8);
  size.kind = TaskKind::size_inference;
  for (const auto& t : build_dataset(size, 5, vocab(), 2)) instances.push_back(t);
  EXPECT_EQ(accuracy(run_agent(reference(AgentKind::oracle), instances, 2)), 1.0);
}

TEST(Agents, UniformAnswersOnlyMentionedLabels) {
  const auto instances = local_square(3000, 2);
  const auto recs = run_agent(reference(AgentKind::uniform_random), instances, 1);
  ASSERT_EQ(recs.size(), instances.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    ASSERT_EQ(recs[i].extracted.size(), 1u);
    const auto m = mention_sequence(instances[i]);
    EXPECT_NE(std::find(m.begin(), m.end(), recs[i].extracted[0]), m.end());
  }
  const double p = 1.0 / 8, se = std::sqrt(p * (1 - p) / static_cast<double>(recs.size()));
  EXPECT_NEAR(accuracy(recs), p, 4 * se);
}

TEST(Agents, UniformAccuracyIsCalibratedAcrossSeeds) {
  // Standardised accuracy over independent agent seeds should be ~N(0, 1).
  const auto instances = local_square(2000, 77);
  const double p = 1.0 / 8, se = std::sqrt(p * (1 - p) / static_cast<double>(instances.size()));
  const int seeds = 120;
  double sum = 0, sum_sq = 0;
  for (int s = 0; s < seeds; ++s) {
    const double z = (accuracy(run_agent(reference(AgentKind::uniform_random, 500 + s), instances, 1)) - p) / se;
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / seeds, var = sum_sq / seeds - mean * mean;
  EXPECT_NEAR(mean, 0.0, 4 / std::sqrt(static_cast<double>(seeds)));
  EXPECT_NEAR(var, 1.0, 4 * std::sqrt(2.0 / seeds));
}

TEST(Agents, DeterministicPerSeedAndRun) {
  const auto instances = local_square(40, 3);
  const auto a = run_agent(reference(AgentKind::uniform_random, 9), instances, 3);
  const auto b = run_agent(reference(AgentKind::uniform_random, 9), instances, 3);
  const auto c = run_agent(reference(AgentKind::uniform_random, 10), instances, 3);
  ASSERT_EQ(a.size(), 120u);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].raw, b[i].raw);
    EXPECT_EQ(a[i].run, static_cast<int>(i / 40));
    EXPECT_EQ(a[i].instance_id, instances[i % 40].id);
    differs |= a[i].raw != c[i].raw;
  }
  EXPECT_TRUE(differs);
}

TEST(Agents, TemporalBiasAnswersMentionNeighbour) {
  const auto instances = local_square(500, 4);
  const auto recs = run_agent(reference(AgentKind::temporal_biased), instances, 1);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto m = mention_sequence(instances[i]);
    const auto j = static_cast<std::size_t>(std::find(m.begin(), m.end(), instances[i].ground_truth[0]) - m.begin());
    std::set<std::string> adjacent;
    if (j > 0) adjacent.insert(m[j - 1]);
    if (j + 1 < m.size()) adjacent.insert(m[j + 1]);
    ASSERT_EQ(recs[i].extracted.size(), 1u);
    EXPECT_TRUE(adjacent.count(recs[i].extracted[0])) << instances[i].id;
  }
}

TEST(Agents, SpatialBiasAnswersNearestWrongMention) {
  const auto instances = local_square(500, 5);
  const auto recs = run_agent(reference(AgentKind::spatial_biased), instances, 1);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& t = instances[i];
    const auto& map = t.world.map();
    const auto fw = oracle::floyd_warshall(map.node_count(), {map.edges().begin(), map.edges().end()});
    const auto truth = *t.world.find(t.ground_truth[0]);
    int best = oracle::kInf;
    for (const auto& l : mention_sequence(t)) {
      if (l != t.ground_truth[0]) best = std::min(best, fw[truth][*t.world.find(l)]);
    }
    EXPECT_EQ(fw[truth][*t.world.find(recs[i].extracted[0])], best);
  }
}

TEST(Agents, StartBiasAnswersStartWhenWrong) {
  const auto instances = local_square(500, 6);
  const auto recs = run_agent(reference(AgentKind::start_biased), instances, 1);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& start = instances[i].world.label(instances[i].walk.start);
    if (start == instances[i].ground_truth[0]) {
      EXPECT_FALSE(recs[i].correct);
    } else {
      EXPECT_EQ(recs[i].extracted[0], start);
    }
  }
}

TEST(Agents, ZeroStrengthIsUniformWrong) {
  const auto instances = local_square(800, 7);
  for (auto k : {AgentKind::temporal_biased, AgentKind::spatial_biased, AgentKind::start_biased}) {
    const auto recs = run_agent(reference(k, 1, 0.0), instances, 1);
    EXPECT_EQ(accuracy(recs), 0.0);
    std::set<std::string> distinct;
    for (const auto& r : recs) distinct.insert(r.raw);
    EXPECT_GT(distinct.size(), 100u);
  }
}

TEST(Agents, SizeCandidatesAreFactorisations) {
  GenerationRequest req;
  req.topology = TopologyDescriptor::square(3, 4);
  req.kind = TaskKind::size_inference;
  const auto t = generate_instance(req, vocab(), 1, "s");
  const auto c = answer_candidates(t);
  EXPECT_EQ(c, (std::vector<std::vector<std::string>>{{"2", "6"}, {"3", "4"}, {"4", "3"}, {"6", "2"}}));
}

TEST(Agents, ConfigValidation) {
  EXPECT_THROW(agent_config_from_json({{"kind", "oracle"}, {"colour", "blue"}}), Error);
  EXPECT_THROW(agent_config_from_json({{"kind", "wizard"}}), Error);
  EXPECT_THROW(agent_config_from_json({{"kind", "uniform_random"}, {"strength", 1.5}}), Error);
  EXPECT_THROW(agent_config_from_json({{"kind", "remote_chat"}, {"model", "m"}}), Error);
  const auto c = agent_config_from_json({{"kind", "remote_chat"}, {"endpoint", "http://x/v1"}, {"model", "m"}});
  EXPECT_EQ(c.decoding.temperature, 1.0);
  EXPECT_EQ(c.decoding.top_p, 1.0);
  EXPECT_EQ(c.decoding.frequency_penalty, 0.0);
  EXPECT_EQ(c.decoding.presence_penalty, 0.0);
  EXPECT_EQ(agent_config_from_json(to_json(c)).endpoint, c.endpoint);
  EXPECT_THROW(parse_endpoint("ftp://x"), Error);
  EXPECT_THROW(parse_endpoint("no-scheme"), Error);
  EXPECT_EQ(parse_endpoint("https://h:8443/a/b").path, "/a/b");
}

TEST(Records, JsonLinesRoundTrip) {
  testsupport::TempDir dir;
  auto recs = run_agent(reference(AgentKind::uniform_random), local_square(10, 8), 2);
  recs[3].error = "http 500";
  write_records(dir.file("r.jsonl"), recs);
  const auto back = read_records(dir.file("r.jsonl"));
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(to_json(back[i]), to_json(recs[i]));
}

// --- scoring --------------------------------------------------------------

TEST(Score, FiveRunExample) {
  std::vector<EvalRecord> recs;
  const int correct[] = {6, 7, 7, 8, 7};
  for (int r = 0; r < 5; ++r) {
    for (int i = 0; i < 10; ++i) {
      EvalRecord e;
      e.run = r;
      e.agent = "a";
      e.correct = i < correct[r];
      recs.push_back(e);
    }
  }
  const auto rows = score(recs, {"agent"});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].mean, 0.70, 1e-12);
  EXPECT_NEAR(rows[0].se, std::sqrt(0.02 / 4) / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(rows[0].se, 0.0316, 5e-5);
  EXPECT_NEAR(rows[0].ci95(), 1.96 * rows[0].se, 1e-15);
  EXPECT_EQ(rows[0].n, 50u);
}

TEST(Score, GroupingAndEdgeCases) {
  auto recs = run_agent(reference(AgentKind::oracle), local_square(10, 9), 3);
  const auto rows = score(recs, {"topology", "setting"});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].group, (std::vector<std::string>{"square", "local"}));
  EXPECT_EQ(rows[0].mean, 1.0);
  EXPECT_EQ(rows[0].se, 0.0);
  EXPECT_EQ(rows[0].run_means.size(), 3u);
  EXPECT_THROW(score({}, {"agent"}), Error);
  EXPECT_THROW(score(recs, {"colour"}), Error);
}

// --- remote agent ---------------------------------------------------------

TEST(Remote, RequestBodyAndOrderedOutput) {
  TokenEnv env;
  // Replies with the first object the prompt mentions, after a delay that
  // scrambles completion order across workers.
  MockChat mock([](const httplib::Request& req, httplib::Response& res, int) {
    const auto body = nlohmann::json::parse(req.body);
    const auto user = body["messages"][1]["content"].get<std::string>();
    std::this_thread::sleep_for(std::chrono::milliseconds(user.size() % 7));
    const auto p = parse_question(user);
    MockChat::reply(res, "Reasoning...\nAnswer: " + *p.start);
  });
  const auto instances = local_square(24, 10);
  auto cfg = remote(mock.url());
  cfg.parallelism = 4;
  const auto recs = run_agent(cfg, instances, 2);
  ASSERT_EQ(recs.size(), 48u);
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const auto& t = instances[k % 24];
    EXPECT_EQ(recs[k].instance_id, t.id);
    EXPECT_EQ(recs[k].run, static_cast<int>(k / 24));
    EXPECT_EQ(recs[k].extracted, std::vector<std::string>{t.world.label(t.walk.start)});
    EXPECT_FALSE(recs[k].error);
  }
  EXPECT_EQ(mock.calls(), 48);
  const auto body = mock.bodies().front();
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"], default_templates().get("system.zero_shot"));
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["temperature"], 1.0);
  EXPECT_EQ(body["top_p"], 1.0);
  EXPECT_EQ(body["frequency_penalty"], 0.0);
  EXPECT_EQ(body["presence_penalty"], 0.0);
  EXPECT_EQ(mock.auth().front(), "Bearer tok-123");
}

TEST(Remote, RetriesTransientStatuses) {
  TokenEnv env;
  MockChat mock([](const httplib::Request&, httplib::Response& res, int call) {
    if (call == 0) {
      res.status = 503;
    } else if (call == 1) {
      res.status = 429;
    } else {
      MockChat::reply(res, "Answer: x");
    }
  });
  const ChatClient client(remote(mock.url()));
  const auto r = client.complete(render_zero_shot(local_square(1, 11)[0]));
  EXPECT_FALSE(r.error);
  EXPECT_EQ(r.text, "Answer: x");
  EXPECT_EQ(r.attempts, 3);
}

TEST(Remote, ClientErrorsAreNotRetried) {
  TokenEnv env;
  MockChat mock([](const httplib::Request&, httplib::Response& res, int) { res.status = 400; });
  const ChatClient client(remote(mock.url()));
  const auto r = client.complete(render_zero_shot(local_square(1, 11)[0]));
  ASSERT_TRUE(r.error);
  EXPECT_EQ(*r.error, "http 400");
  EXPECT_EQ(mock.calls(), 1);
}

TEST(Remote, ExhaustedRetriesBecomeErrorRecords) {
  TokenEnv env;
  MockChat mock([](const httplib::Request&, httplib::Response& res, int call) {
    if (call % 2 == 0) {
      res.status = 500;
    } else {
      res.set_content("not json", "text/plain");
    }
  });
  auto cfg = remote(mock.url());
  cfg.max_retries = 1;
  cfg.parallelism = 2;
  const auto instances = local_square(6, 12);
  const auto recs = run_agent(cfg, instances, 2);
  ASSERT_EQ(recs.size(), 12u);
  for (const auto& r : recs) {
    EXPECT_TRUE(r.error);
    EXPECT_FALSE(r.correct);
    EXPECT_TRUE(r.extracted.empty());
    EXPECT_EQ(r.raw, "");
  }
  EXPECT_EQ(mock.calls(), 24);
}

TEST(Remote, UnreachableEndpoint) {
  TokenEnv env;
  // A port that was free a moment ago and has no listener now.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  ::close(fd);
  auto cfg = remote("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions");
  cfg.max_retries = 2;
  const auto recs = run_agent(cfg, local_square(2, 13), 1);
  ASSERT_EQ(recs.size(), 2u);
  for (const auto& r : recs) {
    ASSERT_TRUE(r.error);
    EXPECT_EQ(r.error->rfind("transport", 0), 0u) << *r.error;
  }
}

TEST(Remote, MissingTokenIsConfigError) {
  ::unsetenv("SPATIALNAV_TEST_TOKEN");
  try {
    run_agent(remote("http://127.0.0.1:9/v1"), local_square(1, 14), 1);
    FAIL() << "expected config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
  }
}

TEST(Remote, CustomResponsePointer) {
  TokenEnv env;
  MockChat mock([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(R"({"output": {"text": "Answer: kite"}})", "application/json");
  });
  auto cfg = remote(mock.url());
  cfg.response_pointer = "/output/text";
  EXPECT_EQ(ChatClient(cfg).complete(render_zero_shot(local_square(1, 15)[0])).text, "Answer: kite");
}
