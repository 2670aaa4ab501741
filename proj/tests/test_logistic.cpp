#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <sstream>

#include "spatialnav/logistic.hpp"
#include "support.hpp"

using namespace spatialnav;

namespace {

const std::vector<double> kPlanted = {3.448, -2.327, -1.820, -2.117, -0.002, -0.345};

std::vector<DifficultyRow> planted_rows(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> type(0, 3), edges(12, 90), steps(2, 12);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<DifficultyRow> rows(n);
  for (auto& r : rows) {
    const int t = type(gen);
    r.hexagon = t == 1;
    r.triangle = t == 2;
    r.ring = t == 3;
    r.edges = edges(gen);
    r.steps = steps(gen);
    const double eta = kPlanted[0] + kPlanted[1] * r.hexagon + kPlanted[2] * r.triangle + kPlanted[3] * r.ring +
                       kPlanted[4] * r.edges + kPlanted[5] * r.steps;
    r.correct = u(gen) < 1.0 / (1.0 + std::exp(-eta));
  }
  return rows;
}

/// Outcome counts grouped by step value: {steps -> (trials, successes)}.
using Grouped = std::map<int, std::pair<int, int>>;

double grouped_ll(const Grouped& g, double a, double b) {
  double ll = 0;
  for (const auto& [x, ts] : g) {
    const double eta = a + b * x;
    const double log_p = -std::log1p(std::exp(-eta));
    const double log_q = -eta + log_p;
    ll += ts.second * log_p + (ts.first - ts.second) * log_q;
  }
  return ll;
}

/// Brute-force maximiser: a coarse 0.05 grid, then a 1e-3 grid around the
/// coarse optimum.
std::pair<double, double> grid_search(const Grouped& g) {
  auto best = std::make_tuple(-1e300, 0.0, 0.0);
  for (double a = -6; a <= 6; a += 0.05)
    for (double b = -3; b <= 3; b += 0.05) {
      const double ll = grouped_ll(g, a, b);
      if (ll > std::get<0>(best)) best = {ll, a, b};
    }
  const auto [ll0, ca, cb] = best;
  best = {-1e300, ca, cb};
  for (int i = -100; i <= 100; ++i)
    for (int j = -100; j <= 100; ++j) {
      const double a = ca + i * 1e-3, b = cb + j * 1e-3;
      const double ll = grouped_ll(g, a, b);
      if (ll > std::get<0>(best)) best = {ll, a, b};
    }
  return {std::get<1>(best), std::get<2>(best)};
}

}  // namespace

TEST(Logistic, SymmetricDataGivesZeroSlope) {
  Eigen::MatrixXd X(8, 2);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) {
    X(i, 0) = 1;
    X(i, 1) = i < 4 ? -1 : 1;
    y[i] = i % 2;
  }
  const auto fit = fit_logistic(X, y, {"(Intercept)", "x"});
  EXPECT_NEAR(fit.coefficients[0].estimate, 0, 1e-9);
  EXPECT_NEAR(fit.coefficients[1].estimate, 0, 1e-9);
  EXPECT_NEAR(fit.log_likelihood, 8 * std::log(0.5), 1e-9);
  EXPECT_NEAR(fit.coefficients[1].p_value, 1.0, 1e-9);
}

TEST(Logistic, InterceptOnlyMatchesLogOdds) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(10, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(10);
  y.head(7).setOnes();
  const auto fit = fit_logistic(X, y, {"(Intercept)"});
  EXPECT_NEAR(fit.coefficients[0].estimate, std::log(7.0 / 3.0), 1e-8);
  // Fisher information n p (1 - p).
  EXPECT_NEAR(fit.coefficients[0].std_error, 1.0 / std::sqrt(10 * 0.7 * 0.3), 1e-8);
}

TEST(Logistic, PlantedRecoveryWithinTwoStandardErrors) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fit = fit_difficulty(planted_rows(50000, 20240611));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(fit.coefficients.size(), kPlanted.size());
  for (std::size_t j = 0; j < kPlanted.size(); ++j) {
    const auto& c = fit.coefficients[j];
    EXPECT_EQ(c.term, difficulty_terms()[j]);
    EXPECT_LT(std::abs(c.estimate - kPlanted[j]), 2 * c.std_error)
        << c.term << " estimate " << c.estimate << " se " << c.std_error;
  }
  EXPECT_LT(secs, 30.0);
}

TEST(Logistic, TwoSeIntervalsCoverAtNominalRate) {
  // 60 replications x 6 coefficients; nominal coverage 0.9545.
  int covered = 0, total = 0;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto fit = fit_difficulty(planted_rows(4000, 1000 + s));
    for (std::size_t j = 0; j < kPlanted.size(); ++j, ++total) {
      const auto& c = fit.coefficients[j];
      covered += std::abs(c.estimate - kPlanted[j]) < 2 * c.std_error;
    }
  }
  const double rate = static_cast<double>(covered) / total;
  const double sd = std::sqrt(0.9545 * 0.0455 / total);
  EXPECT_NEAR(rate, 0.9545, 4 * sd);
}

TEST(Logistic, TwoParameterFitMatchesGridSearch) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> steps(2, 12);
  std::uniform_real_distribution<double> u(0, 1);
  const int n = 3000;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  Grouped g;
  for (int i = 0; i < n; ++i) {
    const int x = steps(gen);
    const bool ok = u(gen) < 1.0 / (1.0 + std::exp(-(3.4 - 0.35 * x)));
    X(i, 0) = 1;
    X(i, 1) = x;
    y[i] = ok;
    g[x].first += 1;
    g[x].second += ok;
  }
  const auto fit = fit_logistic(X, y, {"(Intercept)", "steps"});
  const auto [a, b] = grid_search(g);
  EXPECT_NEAR(fit.coefficients[0].estimate, a, 2e-3);
  EXPECT_NEAR(fit.coefficients[1].estimate, b, 2e-3);
  EXPECT_GE(fit.log_likelihood, grouped_ll(g, a, b) - 1e-9);
}

TEST(Logistic, LikelihoodTraceNonDecreasing) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto fit = fit_difficulty(planted_rows(2000, s));
    ASSERT_GE(fit.log_likelihood_trace.size(), 2u);
    for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i) {
      EXPECT_GE(fit.log_likelihood_trace[i], fit.log_likelihood_trace[i - 1]);
    }
    EXPECT_TRUE(fit.converged);
  }
}

TEST(Logistic, SeparationIsConvergenceError) {
  Eigen::MatrixXd X(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1;
    X(i, 1) = i;
    y[i] = i >= 3;
  }
  try {
    fit_logistic(X, y, {"(Intercept)", "x"});
    FAIL() << "expected convergence error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::convergence);
  }
}

TEST(Logistic, DesignValidation) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 2, 1, 2, 1, 2, 1, 2;  // second column is twice the first
  Eigen::VectorXd y(4);
  y << 0, 1, 0, 1;
  EXPECT_THROW(fit_logistic(X, y, {"a", "b"}), Error);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 1);
  EXPECT_THROW(fit_logistic(ones, Eigen::VectorXd::Ones(4), {"a"}), Error);
  EXPECT_THROW(fit_logistic(ones, y, {"a", "b"}), Error);
  Eigen::VectorXd bad = y;
  bad[0] = 0.5;
  EXPECT_THROW(fit_logistic(ones, bad, {"a"}), Error);
}

TEST(Logistic, CsvHeader) {
  const auto fit = fit_difficulty(planted_rows(3000, 9));
  std::ostringstream os;
  write_regression_csv(os, fit);
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "term,Estimate,Std. Error,z value,Pr(>|z|)");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
  EXPECT_NE(text.find("\nnumber of navigation steps,"), std::string::npos);
}

TEST(Logistic, DifficultyRowsFromRecords) {
  GenerationRequest sq;
  sq.steps = 6;
  GenerationRequest hex = sq;
  hex.topology = TopologyDescriptor::hexagon(1);
  GenerationRequest tree;
  tree.topology = TopologyDescriptor::tree(9, 0);
  tree.kind = TaskKind::tree_kinship;
  tree.order = SerializationOrder::tree_dfs;
  std::vector<TaskInstance> inst;
  for (const auto* r : {&sq, &hex, &tree}) {
    auto part = build_dataset(*r, 3, testsupport::vocab(), 1);
    for (auto& t : part) {
      t.id += "-" + std::string(to_string(t.topology()));
      inst.push_back(std::move(t));
    }
  }
  AgentConfig oracle_cfg;
  oracle_cfg.kind = AgentKind::oracle;
  std::vector<DifficultyRow> rows;
  EXPECT_EQ(difficulty_rows(inst, run_agent(oracle_cfg, inst, 1), rows), 3u);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_FALSE(rows[0].hexagon);
  EXPECT_EQ(rows[0].edges, 12);
  EXPECT_EQ(rows[0].steps, 6);
  EXPECT_TRUE(rows[3].hexagon);
  EXPECT_EQ(rows[3].edges, static_cast<double>(inst[3].world.map().edge_count()));
}
