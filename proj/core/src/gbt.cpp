#include "evactrack/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace evactrack::gbt {

namespace {

using nlohmann::json;

// Row ids sorted ascending by each feature's value; partitioned (order
// preserved) as the tree splits, so every node sees pre-sorted columns.
using SortedColumns = std::vector<std::vector<int>>;

class TreeBuilder {
 public:
  TreeBuilder(std::span<const std::vector<double>> features, std::span<const double> gradients,
              std::span<const double> hessians, const GbtHyperparams& hp)
      : features_(features), g_(gradients), h_(hessians), hp_(hp) {}

  RegressionTree build(SortedColumns columns) {
    tree_.nodes.clear();
    grow(std::move(columns), 0);
    return std::move(tree_);
  }

  SplitDecision search(const SortedColumns& columns) const {
    SplitDecision best;
    const auto n = columns.front().size();
    double g_total = 0.0;
    double h_total = 0.0;
    for (int row : columns.front()) {
      g_total += g_[static_cast<std::size_t>(row)];
      h_total += h_[static_cast<std::size_t>(row)];
    }
    const double parent_term = g_total * g_total / (h_total + hp_.lambda);

    for (std::size_t f = 0; f < columns.size(); ++f) {
      const auto& order = columns[f];
      double g_left = 0.0;
      double h_left = 0.0;
      for (std::size_t p = 0; p + 1 < n; ++p) {
        g_left += g_[static_cast<std::size_t>(order[p])];
        h_left += h_[static_cast<std::size_t>(order[p])];
        const double a = features_[static_cast<std::size_t>(order[p])][f];
        const double b = features_[static_cast<std::size_t>(order[p + 1])][f];
        if (!(a < b)) continue;
        const double h_right = h_total - h_left;
        if (h_left < hp_.min_child_weight || h_right < hp_.min_child_weight) continue;
        const double g_right = g_total - g_left;
        const double gain = 0.5 * (g_left * g_left / (h_left + hp_.lambda) +
                                   g_right * g_right / (h_right + hp_.lambda) - parent_term) -
                            hp_.gamma;
        if (!(gain > best.gain)) continue;
        // Midpoint can round up onto b for adjacent doubles; fall back to a so
        // the value partition matches the prefix the gain was computed on.
        double threshold = 0.5 * (a + b);
        if (!(threshold < b)) threshold = a;
        best = {true, static_cast<int>(f), threshold, gain};
      }
    }
    return best;
  }

 private:
  int grow(SortedColumns columns, int depth) {
    const auto n = columns.front().size();
    double g_total = 0.0;
    double h_total = 0.0;
    for (int row : columns.front()) {
      g_total += g_[static_cast<std::size_t>(row)];
      h_total += h_[static_cast<std::size_t>(row)];
    }

    SplitDecision split;
    if (depth < hp_.max_depth && n >= 2) split = search(columns);
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    if (!split.found) {
      tree_.nodes[static_cast<std::size_t>(index)].weight =
          -g_total / (h_total + hp_.lambda);
      return index;
    }

    SortedColumns left(columns.size());
    SortedColumns right(columns.size());
    for (std::size_t f = 0; f < columns.size(); ++f) {
      left[f].reserve(n);
      right[f].reserve(n);
      for (int row : columns[f]) {
        const double v = features_[static_cast<std::size_t>(row)][static_cast<std::size_t>(split.feature)];
        (v <= split.threshold ? left[f] : right[f]).push_back(row);
      }
    }
    columns.clear();

    const int left_index = grow(std::move(left), depth + 1);
    const int right_index = grow(std::move(right), depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_index;
    node.right = right_index;
    return index;
  }

  std::span<const std::vector<double>> features_;
  std::span<const double> g_;
  std::span<const double> h_;
  const GbtHyperparams& hp_;
  RegressionTree tree_;
};

SortedColumns sort_columns(std::span<const std::vector<double>> features) {
  const std::size_t n_features = features.front().size();
  SortedColumns columns(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    auto& order = columns[f];
    order.resize(features.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return features[static_cast<std::size_t>(a)][f] < features[static_cast<std::size_t>(b)][f];
    });
  }
  return columns;
}

void check_matrix(std::span<const std::vector<double>> features,
                  std::span<const double> targets) {
  if (features.size() < 2)
    raise(ErrorCode::EmptyDataset,
          "training needs at least 2 rows, got " + std::to_string(features.size()));
  if (features.size() != targets.size())
    raise(ErrorCode::DimensionMismatch, "feature and target row counts differ");
  const std::size_t width = features.front().size();
  if (width == 0) raise(ErrorCode::EmptyDataset, "training needs at least one feature");
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != width)
      raise(ErrorCode::DimensionMismatch, "ragged feature row " + std::to_string(i));
    for (double v : features[i])
      if (!std::isfinite(v))
        raise(ErrorCode::NonFiniteFeature, "non-finite feature in row " + std::to_string(i));
    if (!std::isfinite(targets[i]))
      raise(ErrorCode::NonFiniteFeature, "non-finite target in row " + std::to_string(i));
  }
}

double mean_squared_loss(std::span<const double> preds, std::span<const double> targets) {
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(preds.size());
}

json tree_to_json(const RegressionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes)
    nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.weight}));
  return nodes;
}

RegressionTree tree_from_json(const json& nodes) {
  RegressionTree tree;
  for (const auto& n : nodes) {
    if (!n.is_array() || n.size() != 5)
      raise(ErrorCode::CorruptModel, "tree node is not a 5-element array");
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.weight = n.at(4).get<double>();
    tree.nodes.push_back(node);
  }
  const int count = static_cast<int>(tree.nodes.size());
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) continue;
    if (n.left < 0 || n.left >= count || n.right < 0 || n.right >= count)
      raise(ErrorCode::CorruptModel, "tree node child index out of range");
  }
  return tree;
}

}  // namespace

void validate(const GbtHyperparams& hp) {
  if (hp.rounds < 0) raise(ErrorCode::InvalidConfig, "rounds must be >= 0");
  if (hp.max_depth < 1) raise(ErrorCode::InvalidConfig, "max_depth must be >= 1");
  if (!(hp.learning_rate > 0.0) || hp.learning_rate > 1.0)
    raise(ErrorCode::InvalidConfig, "learning_rate must be in (0, 1]");
  if (hp.lambda < 0.0) raise(ErrorCode::InvalidConfig, "lambda must be >= 0");
  if (hp.gamma < 0.0) raise(ErrorCode::InvalidConfig, "gamma must be >= 0");
  if (hp.min_child_weight < 0.0) raise(ErrorCode::InvalidConfig, "min_child_weight must be >= 0");
}

double RegressionTree::predict(std::span<const double> features) const {
  if (nodes.empty()) raise(ErrorCode::CorruptModel, "empty tree");
  int index = 0;
  while (!nodes[static_cast<std::size_t>(index)].is_leaf()) {
    const TreeNode& node = nodes[static_cast<std::size_t>(index)];
    if (static_cast<std::size_t>(node.feature) >= features.size())
      raise(ErrorCode::DimensionMismatch,
            "tree expects feature index " + std::to_string(node.feature) + ", got " +
                std::to_string(features.size()) + " features");
    index = features[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                               : node.right;
  }
  return nodes[static_cast<std::size_t>(index)].weight;
}

SplitDecision best_split(std::span<const std::vector<double>> features,
                         std::span<const double> gradients, std::span<const double> hessians,
                         const GbtHyperparams& hp) {
  validate(hp);
  if (features.empty() || features.front().empty())
    raise(ErrorCode::EmptyDataset, "no rows or no features to split");
  if (features.size() != gradients.size() || features.size() != hessians.size())
    raise(ErrorCode::DimensionMismatch, "gradient/hessian row counts differ from features");
  for (const auto& row : features)
    if (row.size() != features.front().size())
      raise(ErrorCode::DimensionMismatch, "ragged feature rows");
  TreeBuilder builder(features, gradients, hessians, hp);
  return builder.search(sort_columns(features));
}

SingleEnsemble train_single_target(std::span<const std::vector<double>> features,
                                   std::span<const double> targets, const GbtHyperparams& hp,
                                   std::vector<double>* round_losses) {
  validate(hp);
  check_matrix(features, targets);

  SingleEnsemble ensemble;
  const double n = static_cast<double>(targets.size());
  ensemble.base_score = std::accumulate(targets.begin(), targets.end(), 0.0) / n;

  std::vector<double> preds(targets.size(), ensemble.base_score);
  std::vector<double> gradients(targets.size());
  const std::vector<double> hessians(targets.size(), 1.0);
  if (round_losses) {
    round_losses->clear();
    round_losses->push_back(mean_squared_loss(preds, targets));
  }

  const SortedColumns columns = sort_columns(features);
  ensemble.trees.reserve(static_cast<std::size_t>(hp.rounds));
  for (int round = 0; round < hp.rounds; ++round) {
    for (std::size_t i = 0; i < targets.size(); ++i) gradients[i] = preds[i] - targets[i];
    TreeBuilder builder(features, gradients, hessians, hp);
    RegressionTree tree = builder.build(columns);
    for (std::size_t i = 0; i < targets.size(); ++i)
      preds[i] += hp.learning_rate * tree.predict(features[i]);
    ensemble.trees.push_back(std::move(tree));
    if (round_losses) round_losses->push_back(mean_squared_loss(preds, targets));
  }
  return ensemble;
}

double predict_single(const SingleEnsemble& ensemble, std::span<const double> features,
                      double learning_rate) {
  double acc = ensemble.base_score;
  for (const auto& tree : ensemble.trees) acc += learning_rate * tree.predict(features);
  return acc;
}

std::pair<double, double> GbtModel::predict(std::span<const double> features) const {
  if (features.size() != feature_names.size())
    raise(ErrorCode::DimensionMismatch,
          "model expects " + std::to_string(feature_names.size()) + " features, got " +
              std::to_string(features.size()));
  return {predict_single(x, features, hyperparams.learning_rate),
          predict_single(y, features, hyperparams.learning_rate)};
}

GbtModel train(const dataset::SupervisedDataset& data, const GbtHyperparams& hp) {
  validate(hp);
  if (data.rows.empty()) raise(ErrorCode::EmptyDataset, "dataset has no rows");
  const bool with_rel = data.lag.include_relative_distance;
  const auto features = dataset::feature_matrix(data.rows, with_rel);
  std::vector<double> tx(data.rows.size());
  std::vector<double> ty(data.rows.size());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    tx[i] = data.rows[i].target_x;
    ty[i] = data.rows[i].target_y;
  }
  GbtModel model;
  model.hyperparams = hp;
  model.feature_names = dataset::feature_names(data.lag);
  model.x = train_single_target(features, tx, hp);
  model.y = train_single_target(features, ty, hp);
  return model;
}

void save_model(const GbtModel& model, const std::string& path) {
  json doc;
  doc["format"] = "evactrack-gbt";
  doc["version"] = 1;
  doc["hyperparams"] = {{"rounds", model.hyperparams.rounds},
                        {"max_depth", model.hyperparams.max_depth},
                        {"learning_rate", model.hyperparams.learning_rate},
                        {"lambda", model.hyperparams.lambda},
                        {"gamma", model.hyperparams.gamma},
                        {"min_child_weight", model.hyperparams.min_child_weight}};
  doc["feature_names"] = model.feature_names;
  doc["base_x"] = model.x.base_score;
  doc["base_y"] = model.y.base_score;
  json tx = json::array();
  for (const auto& t : model.x.trees) tx.push_back(tree_to_json(t));
  json ty = json::array();
  for (const auto& t : model.y.trees) ty.push_back(tree_to_json(t));
  doc["trees_x"] = std::move(tx);
  doc["trees_y"] = std::move(ty);

  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  out << doc.dump(1) << '\n';
}

GbtModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorCode::CorruptModel, std::string("model file does not parse: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "evactrack-gbt")
    raise(ErrorCode::CorruptModel, "not an evactrack-gbt model file");
  if (doc.value("version", -1) != 1)
    raise(ErrorCode::VersionMismatch,
          "unsupported model version " + doc.value("version", json()).dump());
  GbtModel model;
  try {
    const auto& hp = doc.at("hyperparams");
    model.hyperparams.rounds = hp.at("rounds").get<int>();
    model.hyperparams.max_depth = hp.at("max_depth").get<int>();
    model.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
    model.hyperparams.lambda = hp.at("lambda").get<double>();
    model.hyperparams.gamma = hp.at("gamma").get<double>();
    model.hyperparams.min_child_weight = hp.at("min_child_weight").get<double>();
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.x.base_score = doc.at("base_x").get<double>();
    model.y.base_score = doc.at("base_y").get<double>();
    for (const auto& t : doc.at("trees_x")) model.x.trees.push_back(tree_from_json(t));
    for (const auto& t : doc.at("trees_y")) model.y.trees.push_back(tree_from_json(t));
  } catch (const json::exception& e) {
    raise(ErrorCode::CorruptModel, std::string("model file missing fields: ") + e.what());
  }
  validate(model.hyperparams);
  return model;
}

}  // namespace evactrack::gbt
