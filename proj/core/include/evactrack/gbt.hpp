#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evactrack/dataset.hpp"
#include "evactrack/errors.hpp"

namespace evactrack::gbt {

struct GbtHyperparams {
  int rounds = 200;
  int max_depth = 6;
  double learning_rate = 0.1;
  double lambda = 1.0;           // L2 leaf regularization
  double gamma = 0.0;            // split-gain threshold
  double min_child_weight = 1.0; // minimum child hessian sum
};

void validate(const GbtHyperparams& hp);

/// Flat binary tree; feature < 0 marks a leaf carrying `weight` (raw, before
/// learning-rate shrinkage). Internal nodes route x[feature] <= threshold to
/// `left`, otherwise `right`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;
  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> features) const;
};

struct SplitDecision {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Exact greedy split search over every feature and every midpoint between
/// consecutive distinct sorted values, maximizing
///   gain = 1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma.
/// Ties break to the lowest feature index, then the lowest threshold. Splits
/// with gain <= 0 or a child hessian sum below min_child_weight are rejected.
SplitDecision best_split(std::span<const std::vector<double>> features,
                         std::span<const double> gradients, std::span<const double> hessians,
                         const GbtHyperparams& hp);

struct SingleEnsemble {
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
};

/// Boosts squared-error regression trees: per round, gradients g_i = pred_i -
/// y_i and unit hessians grow one tree whose leaf weights are -G/(H+lambda);
/// predictions accumulate learning_rate * tree output over the base score.
/// When round_losses is given it receives the mean squared training loss after
/// each round (index 0 = base score only).
SingleEnsemble train_single_target(std::span<const std::vector<double>> features,
                                   std::span<const double> targets, const GbtHyperparams& hp,
                                   std::vector<double>* round_losses = nullptr);

double predict_single(const SingleEnsemble& ensemble, std::span<const double> features,
                      double learning_rate);

/// Two independent single-output ensembles over shared features, one per
/// world coordinate.
struct GbtModel {
  GbtHyperparams hyperparams;
  std::vector<std::string> feature_names;
  SingleEnsemble x;
  SingleEnsemble y;

  std::pair<double, double> predict(std::span<const double> features) const;
};

GbtModel train(const dataset::SupervisedDataset& data, const GbtHyperparams& hp);

void save_model(const GbtModel& model, const std::string& path);
GbtModel load_model(const std::string& path);

}  // namespace evactrack::gbt
