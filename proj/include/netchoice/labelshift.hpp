#pragma once

// Black Box Shift Estimation: corrects a classifier's predicted class
// prevalence on a target sample for label shift, using the joint
// prediction/label distribution measured on held-out source data.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "netchoice/common.hpp"

namespace netchoice {

inline constexpr double kMaxConditionNumber = 1e8;

// joint(i, j) = P(prediction = i, truth = j); classes are 0-based here.
struct ConfusionJoint {
  Eigen::MatrixXd joint;
  std::size_t n_holdout = 0;

  Eigen::VectorXd label_marginals() const { return joint.colwise().sum().transpose(); }
  Eigen::VectorXd prediction_marginals() const { return joint.rowwise().sum(); }
};

struct ShiftEstimate {
  Eigen::VectorXd weights;            // target / source label prior ratios
  Eigen::VectorXd corrected_priors;   // q
  Eigen::VectorXd target_predictions; // observed target prediction marginal
  double condition_number = 0;
};

// Labels and predictions are 1-based class indices in [1, k].
inline ConfusionJoint confusion_from_holdout(std::span<const int> predictions, std::span<const int> labels, std::size_t k) {
  if (predictions.size() != labels.size()) throw ValidationError("confusion_from_holdout: lengths differ");
  if (predictions.empty()) throw ValidationError("confusion_from_holdout: empty holdout");
  if (k == 0) throw ValidationError("confusion_from_holdout: need at least one class");
  ConfusionJoint c{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)), predictions.size()};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if (p < 1 || y < 1 || static_cast<std::size_t>(p) > k || static_cast<std::size_t>(y) > k)
      throw ValidationError("confusion_from_holdout: class index out of range at row " + std::to_string(i + 1));
    c.joint(p - 1, y - 1) += 1.0;
  }
  c.joint /= static_cast<double>(predictions.size());
  return c;
}

inline double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  const double smallest = s(s.size() - 1);
  return smallest > 0 ? s(0) / smallest : std::numeric_limits<double>::infinity();
}

// Solves C w = mu for the importance weights.
inline Eigen::VectorXd bbse_weights(const Eigen::MatrixXd& C, const Eigen::VectorXd& mu, double* cond_out = nullptr) {
  if (C.rows() != C.cols()) throw ValidationError("bbse_weights: confusion matrix must be square");
  if (mu.size() != C.rows()) throw ValidationError("bbse_weights: marginal length does not match confusion matrix");
  const double cond = condition_number(C);
  if (cond_out) *cond_out = cond;
  if (!(cond <= kMaxConditionNumber))
    throw NumericalError("bbse_weights: confusion matrix is ill-conditioned (condition number " + format_double(cond) + ")");
  return C.partialPivLu().solve(mu);
}

// q_j = w_j * P_source(y = j), negatives clipped to zero, renormalized.
inline Eigen::VectorXd corrected_priors(const Eigen::VectorXd& w, const Eigen::MatrixXd& C) {
  if (w.size() != C.cols()) throw ValidationError("corrected_priors: weight length does not match confusion matrix");
  Eigen::VectorXd q = w.cwiseProduct(C.colwise().sum().transpose()).cwiseMax(0.0);
  const double total = q.sum();
  if (!(total > 0)) throw NumericalError("corrected_priors: all corrected priors are non-positive");
  q /= total;
  return q;
}

inline ShiftEstimate bbse(const ConfusionJoint& c, const Eigen::VectorXd& target_prediction_marginal) {
  ShiftEstimate out;
  out.target_predictions = target_prediction_marginal;
  out.weights = bbse_weights(c.joint, target_prediction_marginal, &out.condition_number);
  out.corrected_priors = corrected_priors(out.weights, c.joint);
  return out;
}

// Prediction marginal from raw target predictions (1-based).
inline Eigen::VectorXd prediction_marginal(std::span<const int> predictions, std::size_t k) {
  if (predictions.empty()) throw ValidationError("prediction_marginal: no predictions");
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (int p : predictions) {
    if (p < 1 || static_cast<std::size_t>(p) > k) throw ValidationError("prediction_marginal: class index out of range");
    mu(p - 1) += 1.0;
  }
  return mu / static_cast<double>(predictions.size());
}

struct FoldSummary {
  double mean = 0;
  double sd = 0;  // sample standard deviation across folds
  double se = 0;  // sd / sqrt(folds)
};

inline FoldSummary fold_proportion(std::span<const double> estimates) {
  if (estimates.size() < 2) throw ValidationError("fold_proportion: need at least two folds");
  const double n = static_cast<double>(estimates.size());
  double mean = 0;
  for (double e : estimates) mean += e;
  mean /= n;
  double ss = 0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  FoldSummary s;
  s.mean = mean;
  s.sd = std::sqrt(ss / (n - 1));
  s.se = s.sd / std::sqrt(n);
  return s;
}

inline nlohmann::json to_json(const ShiftEstimate& s) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"weights", vec(s.weights)},
          {"corrected_priors", vec(s.corrected_priors)},
          {"target_prediction_marginal", vec(s.target_predictions)},
          {"condition_number", s.condition_number}};
}

}  // namespace netchoice
