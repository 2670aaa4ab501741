#pragma once

// Logistic regression by iteratively reweighted least squares, and the
// difficulty model over evaluation records.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

// <resolv.h> (pulled in by the HTTP client) defines _res, an identifier
// Eigen uses as a parameter name.
#pragma push_macro("_res")
#undef _res
#include <Eigen/Dense>
#pragma pop_macro("_res")

#include "spatialnav/errors.hpp"
#include "spatialnav/harness.hpp"
#include "spatialnav/instance.hpp"

namespace spatialnav {

struct Coefficient {
  std::string term;
  double estimate = 0;
  double std_error = 0;
  double z_value = 0;
  double p_value = 0;
};

struct RegressionFit {
  std::vector<Coefficient> coefficients;
  double log_likelihood = 0;
  std::vector<double> log_likelihood_trace;  // after each accepted iteration, starting at beta = 0
  int iterations = 0;
  bool converged = false;
};

struct IrlsOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
  // Fitted probabilities this close to 0 or 1 on every row signal separation.
  double separation_eps = 1e-10;
};

namespace detail {

inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

inline double log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = X * beta;
  double ll = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += y[i] > 0.5 ? log_sigmoid(eta[i]) : log_sigmoid(-eta[i]);
  }
  return ll;
}

inline Eigen::VectorXd probabilities(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-eta[i]));
  return p;
}

}  // namespace detail

/// Maximum-likelihood logistic fit. X includes the intercept column when
/// wanted; y holds 0/1. Step halving keeps the log-likelihood non-decreasing.
inline RegressionFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const std::vector<std::string>& terms, const IrlsOptions& opt = {}) {
  const auto n = X.rows();
  const auto k = X.cols();
  if (y.size() != n) throw analysis_error("outcome length does not match design rows");
  if (static_cast<Eigen::Index>(terms.size()) != k) throw analysis_error("term names do not match design columns");
  if (n == 0) throw analysis_error("empty design");
  bool any0 = false, any1 = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw analysis_error("outcomes must be 0 or 1");
    (y[i] > 0.5 ? any1 : any0) = true;
  }
  if (!any0 || !any1) throw analysis_error("logistic fit needs both outcomes present");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < k) {
    throw analysis_error("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                         std::to_string(k) + " columns)");
  }

  RegressionFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  double ll = detail::log_likelihood(X, y, beta);
  fit.log_likelihood_trace.push_back(ll);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Eigen::VectorXd p = detail::probabilities(X, beta);
    const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).max(1e-300).matrix();
    const Eigen::MatrixXd xtwx = X.transpose() * w.asDiagonal() * X;
    const Eigen::VectorXd grad = X.transpose() * (y - p);
    Eigen::VectorXd step = xtwx.ldlt().solve(grad);
    Eigen::VectorXd next = beta + step;
    double next_ll = detail::log_likelihood(X, y, next);
    for (int h = 0; h < 50 && !(next_ll >= ll); ++h) {
      step *= 0.5;
      next = beta + step;
      next_ll = detail::log_likelihood(X, y, next);
    }
    if (!(next_ll >= ll)) {
      next = beta;
      next_ll = ll;
    }
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    ll = next_ll;
    fit.log_likelihood_trace.push_back(ll);
    fit.iterations = it;
    if (change < opt.tolerance) {
      fit.converged = true;
      break;
    }
  }

  const Eigen::VectorXd p = detail::probabilities(X, beta);
  const bool separated = (p.array() < opt.separation_eps || p.array() > 1 - opt.separation_eps).all();
  if (!fit.converged || separated) {
    throw Error(ErrorCode::convergence,
                std::string(separated ? "perfect separation: " : "IRLS did not converge: ") +
                    "max |beta| = " + std::to_string(beta.cwiseAbs().maxCoeff()) + " after " +
                    std::to_string(fit.iterations) + " iterations, log-likelihood " + std::to_string(ll));
  }
  const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).matrix();
  const Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  fit.log_likelihood = ll;
  for (Eigen::Index j = 0; j < k; ++j) {
    Coefficient c;
    c.term = terms[static_cast<std::size_t>(j)];
    c.estimate = beta[j];
    c.std_error = std::sqrt(cov(j, j));
    c.z_value = c.estimate / c.std_error;
    c.p_value = std::erfc(std::abs(c.z_value) / std::sqrt(2.0));
    fit.coefficients.push_back(c);
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Difficulty model

struct DifficultyRow {
  bool correct = false;
  bool hexagon = false;
  bool triangle = false;
  bool ring = false;
  double edges = 0;
  double steps = 0;
};

inline const std::vector<std::string>& difficulty_terms() {
  static const std::vector<std::string> terms = {"(Intercept)",     "type is hexagon",  "type is triangle",
                                                 "type is ring",    "number of edges",  "number of navigation steps"};
  return terms;
}

inline RegressionFit fit_difficulty(const std::vector<DifficultyRow>& rows, const IrlsOptions& opt = {}) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd X(n, 6);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    X.row(i) << 1.0, r.hexagon, r.triangle, r.ring, r.edges, r.steps;
    y[i] = r.correct ? 1.0 : 0.0;
  }
  return fit_logistic(X, y, difficulty_terms(), opt);
}

/// Rows for every record on a square, hexagon, triangle or ring walk; square
/// is the reference level. Returns the number of records skipped.
inline std::size_t difficulty_rows(const std::vector<TaskInstance>& instances,
                                   const std::vector<EvalRecord>& records, std::vector<DifficultyRow>& out) {
  std::unordered_map<std::string, const TaskInstance*> by_id;
  for (const auto& t : instances) by_id.emplace(t.id, &t);
  std::size_t skipped = 0;
  for (const auto& r : records) {
    const auto it = by_id.find(r.instance_id);
    if (it == by_id.end()) throw analysis_error("record refers to unknown instance " + r.instance_id);
    const auto& t = *it->second;
    const auto kind = t.topology();
    const bool walk = t.kind == TaskKind::loop_closure_local || t.kind == TaskKind::path_global;
    if (!walk || (kind != TopologyKind::square && kind != TopologyKind::hexagon &&
                  kind != TopologyKind::triangle && kind != TopologyKind::ring)) {
      ++skipped;
      continue;
    }
    out.push_back({r.correct, kind == TopologyKind::hexagon, kind == TopologyKind::triangle,
                   kind == TopologyKind::ring, static_cast<double>(t.world.map().edge_count()),
                   static_cast<double>(t.navigation_steps())});
  }
  return skipped;
}

inline void write_regression_csv(std::ostream& os, const RegressionFit& fit) {
  const auto num = [](double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::string(buf);
  };
  os << "term,Estimate,Std. Error,z value,Pr(>|z|)\n";
  for (const auto& c : fit.coefficients) {
    os << c.term << ',' << num(c.estimate) << ',' << num(c.std_error) << ',' << num(c.z_value) << ','
       << num(c.p_value) << '\n';
  }
}

}  // namespace spatialnav
