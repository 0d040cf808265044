#pragma once

// Maximum-likelihood fits with observed-information standard errors:
// conditional multinomial logit, binary logistic regression, OLS, and
// nested-model tests.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "netchoice/choice_instance.hpp"
#include "netchoice/common.hpp"
#include "netchoice/csv.hpp"
#include "netchoice/parallel.hpp"
#include "netchoice/special_functions.hpp"

namespace netchoice {

enum class ModelKind { mnl, logit, ols };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::mnl: return "mnl";
    case ModelKind::logit: return "logit";
    case ModelKind::ols: return "ols";
  }
  return "?";
}

struct FitResult {
  ModelKind model = ModelKind::mnl;
  std::vector<std::string> feature_names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  double loglik = 0;
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0;  // max-abs score at the returned estimate

  // OLS only
  std::optional<double> rss;
  std::optional<double> r_squared;
  std::optional<double> f_statistic;
  std::optional<double> f_p_value;
  std::size_t df_model = 0;
  std::size_t df_resid = 0;

  // z (t for OLS) statistic and its two-sided p-value per coefficient.
  double statistic(std::size_t k) const { return coefficients(static_cast<Eigen::Index>(k)) / std_errors(static_cast<Eigen::Index>(k)); }
  double p_value(std::size_t k) const {
    double s = statistic(k);
    return model == ModelKind::ols ? special::t_two_sided(s, static_cast<double>(df_resid)) : special::normal_two_sided(s);
  }
};

struct TestResult {
  double statistic = 0;
  double df1 = 0;
  double df2 = 0;  // F tests only
  double p_value = 1;
};

struct FitOptions {
  double tol = 1e-8;
  int max_iter = 100;
  std::size_t threads = 1;
};

inline double odds_ratio(double coefficient) { return std::exp(coefficient); }

// ---------------------------------------------------------------------------
// Conditional multinomial logit

struct MnlEvaluation {
  double loglik = 0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

namespace detail {

inline constexpr std::size_t kReductionChunk = 64;

inline std::size_t common_dim(std::span<const ChoiceInstance> instances) {
  if (instances.empty()) return 0;
  const auto p = instances.front().dim();
  for (const auto& c : instances)
    if (c.dim() != p) throw ValidationError("choice instances disagree on feature count");
  return p;
}

// Accumulates one instance. Utilities are shifted by their max before
// exponentiating.
inline void mnl_accumulate(const ChoiceInstance& c, const Eigen::VectorXd& beta, bool need_grad, bool need_hess,
                           MnlEvaluation& acc) {
  const Eigen::VectorXd u = c.X * beta;
  const double m = u.maxCoeff();
  const Eigen::ArrayXd e = (u.array() - m).exp();
  const double s = e.sum();
  const auto chosen = static_cast<Eigen::Index>(c.chosen);
  acc.loglik += u(chosen) - m - std::log(s);
  if (!need_grad && !need_hess) return;
  const Eigen::VectorXd prob = e.matrix() / s;
  const Eigen::VectorXd xbar = c.X.transpose() * prob;
  if (need_grad) acc.gradient += c.X.row(chosen).transpose() - xbar;
  if (need_hess) {
    acc.hessian.noalias() -= c.X.transpose() * prob.asDiagonal() * c.X;
    acc.hessian.noalias() += xbar * xbar.transpose();
  }
}

}  // namespace detail

inline MnlEvaluation mnl_evaluate(const Eigen::VectorXd& beta, std::span<const ChoiceInstance> instances,
                                  bool need_grad = true, bool need_hess = true, std::size_t threads = 1) {
  const auto p = detail::common_dim(instances);
  if (!instances.empty() && static_cast<std::size_t>(beta.size()) != p)
    throw ValidationError("coefficient vector length does not match feature count");
  const auto dim = static_cast<Eigen::Index>(beta.size());
  MnlEvaluation zero{0.0, Eigen::VectorXd::Zero(need_grad ? dim : 0), Eigen::MatrixXd::Zero(need_hess ? dim : 0, need_hess ? dim : 0)};
  return chunked_reduce(
      instances.size(), detail::kReductionChunk, threads, zero,
      [&](std::size_t begin, std::size_t end) {
        MnlEvaluation part = zero;
        for (std::size_t i = begin; i < end; ++i) detail::mnl_accumulate(instances[i], beta, need_grad, need_hess, part);
        return part;
      },
      [&](MnlEvaluation& total, const MnlEvaluation& part) {
        total.loglik += part.loglik;
        if (need_grad) total.gradient += part.gradient;
        if (need_hess) total.hessian += part.hessian;
      });
}

inline double mnl_loglik(const Eigen::VectorXd& beta, std::span<const ChoiceInstance> instances) {
  return mnl_evaluate(beta, instances, false, false).loglik;
}

inline Eigen::VectorXd mnl_gradient(const Eigen::VectorXd& beta, std::span<const ChoiceInstance> instances) {
  return mnl_evaluate(beta, instances, true, false).gradient;
}

inline Eigen::MatrixXd mnl_hessian(const Eigen::VectorXd& beta, std::span<const ChoiceInstance> instances) {
  return mnl_evaluate(beta, instances, false, true).hessian;
}

struct ProbabilityRow {
  Eigen::VectorXd utilities;
  Eigen::VectorXd probabilities;
};

inline std::vector<ProbabilityRow> mnl_probabilities(const Eigen::VectorXd& beta, std::span<const ChoiceInstance> instances) {
  std::vector<ProbabilityRow> out;
  out.reserve(instances.size());
  for (const auto& c : instances) {
    ProbabilityRow row;
    row.utilities = c.X * beta;
    const Eigen::ArrayXd e = (row.utilities.array() - row.utilities.maxCoeff()).exp();
    row.probabilities = e.matrix() / e.sum();
    out.push_back(std::move(row));
  }
  return out;
}

// Share of instances whose chosen alternative has strictly the highest
// utility. Ties count as misses.
inline double mnl_accuracy(const Eigen::VectorXd& beta, std::span<const ChoiceInstance> instances) {
  if (instances.empty()) throw ValidationError("mnl_accuracy: no instances");
  std::size_t hits = 0;
  for (const auto& c : instances) {
    const Eigen::VectorXd u = c.X * beta;
    const auto chosen = static_cast<Eigen::Index>(c.chosen);
    bool strict = true;
    for (Eigen::Index k = 0; k < u.size() && strict; ++k)
      if (k != chosen && !(u(chosen) > u(k))) strict = false;
    if (strict) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(instances.size());
}

inline double mnl_accuracy(const FitResult& fit, std::span<const ChoiceInstance> instances) {
  return mnl_accuracy(fit.coefficients, instances);
}

namespace detail {

inline std::string condition_report(const Eigen::MatrixXd& information) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  std::ostringstream os;
  os << "smallest eigenvalue " << ev.minCoeff() << ", largest " << ev.maxCoeff();
  if (ev.minCoeff() > 0) os << ", condition number " << ev.maxCoeff() / ev.minCoeff();
  else os << ", condition number inf";
  return os.str();
}

// Solves information * step = score for a positive definite information
// matrix, raising NumericalError when it is singular.
inline Eigen::VectorXd newton_step(const Eigen::MatrixXd& information, const Eigen::VectorXd& score) {
  Eigen::LLT<Eigen::MatrixXd> llt(information);
  if (llt.info() != Eigen::Success) throw NumericalError("singular Hessian: " + condition_report(information));
  return llt.solve(score);
}

inline Eigen::VectorXd standard_errors(const Eigen::MatrixXd& information) {
  Eigen::LLT<Eigen::MatrixXd> llt(information);
  if (llt.info() != Eigen::Success) throw NumericalError("singular Hessian at optimum: " + condition_report(information));
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(information.rows(), information.cols()));
  return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

// Damped Newton ascent from zero with step halving. `eval(beta)` returns
// (loglik, gradient, hessian); `guard(beta)` may throw to abort.
template <typename Eval, typename Guard>
FitResult newton_maximize(Eigen::Index dim, const FitOptions& opt, Eval eval, Guard guard) {
  FitResult fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim);
  auto cur = eval(beta);
  int iter = 0;
  for (;;) {
    fit.gradient_norm = cur.gradient.size() ? cur.gradient.cwiseAbs().maxCoeff() : 0.0;
    if (fit.gradient_norm < opt.tol) {
      fit.converged = true;
      break;
    }
    if (iter >= opt.max_iter) break;
    const Eigen::VectorXd step = newton_step(-cur.hessian, cur.gradient);
    double scale = 1.0;
    Eigen::VectorXd next = beta + step;
    auto cand = eval(next);
    for (int halvings = 0; !(cand.loglik >= cur.loglik) && halvings < 60; ++halvings) {
      scale *= 0.5;
      next = beta + scale * step;
      cand = eval(next);
    }
    ++iter;
    if (!(cand.loglik >= cur.loglik)) break;  // no ascent possible; report unconverged
    beta = std::move(next);
    cur = std::move(cand);
    guard(beta);
  }
  fit.iterations = iter;
  fit.coefficients = beta;
  fit.loglik = cur.loglik;
  fit.std_errors = standard_errors(-cur.hessian);
  fit.n_params = static_cast<std::size_t>(dim);
  return fit;
}

}  // namespace detail

// Fails when a feature never varies across the alternatives of any instance;
// its coefficient would be unidentified.
inline void mnl_check_identifiable(std::span<const ChoiceInstance> instances) {
  const auto p = detail::common_dim(instances);
  for (std::size_t k = 0; k < p; ++k) {
    bool varies = false;
    for (const auto& c : instances) {
      auto col = c.X.col(static_cast<Eigen::Index>(k));
      if (col.maxCoeff() != col.minCoeff()) {
        varies = true;
        break;
      }
    }
    if (!varies) {
      const auto& names = instances.front().feature_names;
      std::string name = k < names.size() ? names[k] : "column " + std::to_string(k);
      throw ValidationError("feature '" + name + "' is constant across alternatives in every instance");
    }
  }
}

inline FitResult mnl_fit(std::span<const ChoiceInstance> instances, const FitOptions& opt = {}) {
  if (instances.empty()) throw ValidationError("mnl_fit: no instances");
  for (const auto& c : instances) validate(c);
  mnl_check_identifiable(instances);
  const auto dim = static_cast<Eigen::Index>(detail::common_dim(instances));
  auto fit = detail::newton_maximize(
      dim, opt, [&](const Eigen::VectorXd& b) { return mnl_evaluate(b, instances, true, true, opt.threads); },
      [](const Eigen::VectorXd&) {});
  fit.model = ModelKind::mnl;
  fit.n_obs = instances.size();
  fit.feature_names = instances.front().feature_names;
  if (fit.feature_names.size() != static_cast<std::size_t>(dim)) {
    fit.feature_names.clear();
    for (Eigen::Index k = 0; k < dim; ++k) fit.feature_names.push_back("x" + std::to_string(k));
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Binary logistic regression

inline constexpr double kSeparationBound = 30.0;

namespace detail {

// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Eigen::VectorXd column_scales(const Eigen::MatrixXd& X) {
  Eigen::VectorXd scale(X.cols());
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    const auto col = X.col(k);
    const double mean = col.mean();
    const double sd = X.rows() > 1 ? std::sqrt((col.array() - mean).square().sum() / static_cast<double>(X.rows() - 1)) : 0.0;
    const double max_abs = col.cwiseAbs().maxCoeff();
    scale(k) = sd > 0 ? sd : (max_abs > 0 ? max_abs : 1.0);
  }
  return scale;
}

}  // namespace detail

// Newton/IRLS on the column-standardized design; coefficients are mapped
// back to the original scale. Perfect separation shows up as coefficients
// diverging past kSeparationBound on the standardized scale, or as fitted
// probabilities reproducing every outcome.
inline FitResult logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names = {},
                              const FitOptions& opt = {}) {
  if (X.rows() != y.size()) throw ValidationError("logistic_fit: design and outcome lengths differ");
  if (X.rows() == 0) throw ValidationError("logistic_fit: no observations");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 0.0 && y(i) != 1.0) throw ValidationError("logistic_fit: outcomes must be 0 or 1");
  if (!X.allFinite()) throw ValidationError("logistic_fit: non-finite design value");

  const Eigen::VectorXd scale = detail::column_scales(X);
  const Eigen::MatrixXd Z = X * scale.cwiseInverse().asDiagonal();
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    if (qr.rank() < Z.cols()) throw ValidationError("logistic_fit: design matrix is rank deficient");
  }

  auto eval = [&](const Eigen::VectorXd& g) {
    MnlEvaluation r;
    const Eigen::VectorXd eta = Z * g;
    Eigen::VectorXd resid(eta.size()), w(eta.size());
    double ll = 0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double p = detail::sigmoid(eta(i));
      ll += y(i) * eta(i) - detail::log1p_exp(eta(i));
      resid(i) = y(i) - p;
      w(i) = p * (1 - p);
    }
    r.loglik = ll;
    r.gradient = Z.transpose() * resid;
    r.hessian = -(Z.transpose() * w.asDiagonal() * Z);
    return r;
  };
  auto separation = [](const std::string& why) {
    return NumericalError("logistic_fit: perfect separation detected (" + why + ")");
  };
  auto guard = [&](const Eigen::VectorXd& g) {
    if (g.cwiseAbs().maxCoeff() > kSeparationBound)
      throw separation("standardized coefficient exceeds " + format_double(kSeparationBound));
  };

  FitResult fit;
  try {
    fit = detail::newton_maximize(Z.cols(), opt, eval, guard);
  } catch (const NumericalError& e) {
    if (std::string(e.what()).find("separation") != std::string::npos) throw;
    throw separation(std::string("information matrix became singular: ") + e.what());
  }
  {
    const Eigen::VectorXd eta = Z * fit.coefficients;
    bool perfect = true;
    for (Eigen::Index i = 0; i < eta.size() && perfect; ++i)
      perfect = std::fabs(y(i) - detail::sigmoid(eta(i))) < 1e-6;
    if (perfect) throw separation("fitted probabilities reproduce every outcome");
  }
  fit.coefficients = fit.coefficients.cwiseQuotient(scale);
  fit.std_errors = fit.std_errors.cwiseQuotient(scale);
  fit.model = ModelKind::logit;
  fit.n_obs = static_cast<std::size_t>(X.rows());
  fit.feature_names = std::move(names);
  if (fit.feature_names.size() != static_cast<std::size_t>(X.cols())) {
    fit.feature_names.clear();
    for (Eigen::Index k = 0; k < X.cols(); ++k) fit.feature_names.push_back("x" + std::to_string(k));
  }
  return fit;
}

inline double logistic_predict(const FitResult& fit, const Eigen::VectorXd& row) {
  return detail::sigmoid(row.dot(fit.coefficients));
}

// ---------------------------------------------------------------------------
// Ordinary least squares

inline FitResult ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names = {}) {
  const auto n = X.rows(), p = X.cols();
  if (n != y.size()) throw ValidationError("ols_fit: design and outcome lengths differ");
  if (p == 0) throw ValidationError("ols_fit: empty design");
  if (n <= p) throw ValidationError("ols_fit: need more observations than columns");
  if (names.size() != static_cast<std::size_t>(p)) {
    names.clear();
    for (Eigen::Index k = 0; k < p; ++k) names.push_back("x" + std::to_string(k));
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) {
    std::string msg = "ols_fit: rank-deficient design; dependent columns:";
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < p; ++k) msg += " '" + names[static_cast<std::size_t>(perm(k))] + "'";
    throw ValidationError(msg);
  }

  FitResult fit;
  fit.model = ModelKind::ols;
  fit.feature_names = std::move(names);
  fit.coefficients = qr.solve(y);
  const Eigen::VectorXd resid = y - X * fit.coefficients;
  const double rss = resid.squaredNorm();
  const auto df_resid = static_cast<std::size_t>(n - p);
  const double sigma2 = rss / static_cast<double>(df_resid);

  // (X'X)^{-1} = P R^{-1} R^{-T} P'
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = Rinv * Rinv.transpose();
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = perm * inner * perm.transpose();
  fit.std_errors = (sigma2 * xtx_inv.diagonal()).cwiseMax(0.0).cwiseSqrt();

  bool has_intercept = false;
  for (Eigen::Index k = 0; k < p && !has_intercept; ++k) has_intercept = (X.col(k).array() == 1.0).all();
  const double tss = has_intercept ? (y.array() - y.mean()).square().sum() : y.squaredNorm();
  fit.rss = rss;
  fit.r_squared = tss > 0 ? 1.0 - rss / tss : 1.0;
  fit.df_resid = df_resid;
  fit.df_model = static_cast<std::size_t>(p) - (has_intercept ? 1 : 0);
  if (fit.df_model > 0) {
    const double f = ((tss - rss) / static_cast<double>(fit.df_model)) / sigma2;
    fit.f_statistic = f;
    fit.f_p_value = special::f_sf(f, static_cast<double>(fit.df_model), static_cast<double>(df_resid));
  }
  const double nn = static_cast<double>(n);
  fit.loglik = rss > 0 ? -0.5 * nn * (std::log(2.0 * M_PI) + std::log(rss / nn) + 1.0)
                       : std::numeric_limits<double>::infinity();
  fit.n_obs = static_cast<std::size_t>(n);
  fit.n_params = static_cast<std::size_t>(p);
  fit.converged = true;
  fit.gradient_norm = (X.transpose() * resid).cwiseAbs().maxCoeff();
  return fit;
}

inline double ols_predict(const FitResult& fit, const Eigen::VectorXd& row) { return row.dot(fit.coefficients); }

// ---------------------------------------------------------------------------
// Nested-model tests

namespace detail {
inline void check_nested(const FitResult& full, const FitResult& reduced) {
  if (full.n_obs != reduced.n_obs) throw ValidationError("nested test: models fit on different observation counts");
  if (reduced.n_params > full.n_params) throw ValidationError("nested test: reduced model has more parameters");
  for (const auto& name : reduced.feature_names)
    if (std::find(full.feature_names.begin(), full.feature_names.end(), name) == full.feature_names.end())
      throw ValidationError("nested test: reduced column '" + name + "' not in full model");
}
}  // namespace detail

inline TestResult f_test_nested(const FitResult& full, const FitResult& reduced) {
  if (!full.rss || !reduced.rss) throw ValidationError("f_test_nested: both fits must be OLS");
  detail::check_nested(full, reduced);
  const double rss_f = *full.rss, rss_r = *reduced.rss;
  // Identical fits can differ in the last bits.
  const double slack = 1e-12 * std::max(1.0, rss_r);
  if (rss_f > rss_r + slack) throw NumericalError("f_test_nested: full model has larger RSS than reduced model");
  TestResult r;
  r.df1 = static_cast<double>(full.n_params - reduced.n_params);
  r.df2 = static_cast<double>(full.n_obs - full.n_params);
  if (r.df1 == 0) return r;
  const double num = std::max(0.0, rss_r - rss_f) / r.df1;
  r.statistic = rss_f > 0 ? num / (rss_f / r.df2) : (num > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  r.p_value = special::f_sf(r.statistic, r.df1, r.df2);
  return r;
}

inline TestResult lr_test_nested(const FitResult& full, const FitResult& reduced) {
  detail::check_nested(full, reduced);
  const double slack = 1e-9 * std::max(1.0, std::fabs(reduced.loglik));
  if (full.loglik < reduced.loglik - slack) throw NumericalError("lr_test_nested: full model has lower log-likelihood");
  TestResult r;
  r.df1 = static_cast<double>(full.n_params - reduced.n_params);
  if (r.df1 == 0) return r;
  r.statistic = std::max(0.0, 2.0 * (full.loglik - reduced.loglik));
  r.p_value = special::chi_square_sf(r.statistic, r.df1);
  return r;
}

// Test on chi-square or F tail given the raw statistic.
inline TestResult lr_test(double statistic, double df) {
  return {statistic, df, 0.0, special::chi_square_sf(statistic, df)};
}

// ---------------------------------------------------------------------------
// Design matrices from numeric tables

struct Design {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
};

// Terms are column names or products written "a:b" (any number of factors).
inline Design build_design(const csv::NumericTable& table, const std::string& outcome, const std::vector<std::string>& terms,
                           bool intercept) {
  Design d;
  const auto n = static_cast<Eigen::Index>(table.rows());
  const auto p = static_cast<Eigen::Index>(terms.size() + (intercept ? 1 : 0));
  d.X.resize(n, p);
  d.y = Eigen::Map<const Eigen::VectorXd>(table.column(outcome).data(), n);
  Eigen::Index k = 0;
  if (intercept) {
    d.X.col(k++).setOnes();
    d.names.emplace_back("Intercept");
  }
  for (const auto& term : terms) {
    Eigen::VectorXd col = Eigen::VectorXd::Ones(n);
    std::size_t start = 0;
    for (;;) {
      auto colon = term.find(':', start);
      auto factor = term.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
      col.array() *= Eigen::Map<const Eigen::ArrayXd>(table.column(factor).data(), n);
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
    d.X.col(k++) = col;
    d.names.push_back(term);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Output

inline std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

inline nlohmann::json to_json(const FitResult& fit) {
  auto vec = [](const Eigen::VectorXd& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  nlohmann::json j{{"model", std::string(to_string(fit.model))},
                   {"feature_names", fit.feature_names},
                   {"coefficients", vec(fit.coefficients)},
                   {"std_errors", vec(fit.std_errors)},
                   {"n_obs", fit.n_obs},
                   {"n_params", fit.n_params},
                   {"converged", fit.converged},
                   {"iterations", fit.iterations}};
  if (fit.rss) {
    j["rss"] = *fit.rss;
    j["r_squared"] = fit.r_squared.value_or(0.0);
    j["df_model"] = fit.df_model;
    j["df_resid"] = fit.df_resid;
    if (fit.f_statistic) {
      j["f_statistic"] = *fit.f_statistic;
      j["f_p_value"] = *fit.f_p_value;
    }
  }
  if (std::isfinite(fit.loglik)) j["loglik"] = fit.loglik;
  else j["loglik"] = nullptr;
  std::vector<double> p;
  for (std::size_t k = 0; k < fit.n_params; ++k) p.push_back(fit.p_value(k));
  j["p_values"] = p;
  return j;
}

inline FitResult fit_from_json(const nlohmann::json& j) {
  FitResult fit;
  try {
    auto model = j.at("model").get<std::string>();
    fit.model = model == "ols" ? ModelKind::ols : model == "logit" ? ModelKind::logit : ModelKind::mnl;
    fit.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    auto c = j.at("coefficients").get<std::vector<double>>();
    auto s = j.at("std_errors").get<std::vector<double>>();
    if (c.size() != s.size() || c.size() != fit.feature_names.size())
      throw ValidationError("fit JSON: coefficient, std_error and name counts differ");
    fit.coefficients = Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    fit.std_errors = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    fit.n_obs = j.at("n_obs").get<std::size_t>();
    fit.n_params = c.size();
    fit.converged = j.value("converged", false);
    fit.iterations = j.value("iterations", 0);
    fit.loglik = j.at("loglik").is_null() ? std::numeric_limits<double>::infinity() : j.at("loglik").get<double>();
    if (j.contains("rss")) {
      fit.rss = j.at("rss").get<double>();
      fit.r_squared = j.value("r_squared", 0.0);
      fit.df_model = j.value("df_model", std::size_t{0});
      fit.df_resid = j.value("df_resid", std::size_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed fit JSON: ") + e.what());
  }
  return fit;
}

// Aligned text table: feature, estimate with stars, std error, statistic, p.
inline std::string coefficient_table(const FitResult& fit) {
  std::size_t width = 8;
  for (const auto& n : fit.feature_names) width = std::max(width, n.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "Feature" << std::right << std::setw(16) << "Estimate"
     << std::setw(14) << "Std.Err." << std::setw(12) << (fit.model == ModelKind::ols ? "t" : "z") << std::setw(12)
     << "P>|.|" << '\n';
  os << std::string(width + 54, '-') << '\n';
  for (std::size_t k = 0; k < fit.n_params; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double pv = fit.p_value(k);
    std::ostringstream est;
    est << std::fixed << std::setprecision(4) << fit.coefficients(kk) << significance_stars(pv);
    os << std::left << std::setw(static_cast<int>(width)) << fit.feature_names[k] << std::right << std::setw(16)
       << est.str() << std::fixed << std::setprecision(4) << std::setw(14) << fit.std_errors(kk) << std::setw(12)
       << fit.statistic(k) << std::setw(12) << pv << '\n';
  }
  os << std::string(width + 54, '-') << '\n';
  os << "Observations: " << fit.n_obs << '\n';
  if (std::isfinite(fit.loglik)) os << "Log Likelihood: " << std::fixed << std::setprecision(3) << fit.loglik << '\n';
  if (fit.r_squared) os << "R squared: " << std::fixed << std::setprecision(4) << *fit.r_squared << '\n';
  if (fit.f_statistic)
    os << "F statistic: " << std::fixed << std::setprecision(4) << *fit.f_statistic << " on " << fit.df_model << " and "
       << fit.df_resid << " df\n";
  os << "Note: * p<0.05; ** p<0.01; *** p<0.001\n";
  return os.str();
}

}  // namespace netchoice
