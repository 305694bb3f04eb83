#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "webgraph/features.hpp"

namespace webgraph {

/// Entropy (bits) of a binary label vector; labels are 0/1.
double binary_entropy(double positive, double total);

/// H(labels) minus the weighted entropy after splitting at value <= threshold.
double info_gain(const std::vector<double>& values, const std::vector<int>& labels,
                 double threshold);

struct Hyperparams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 20;
  std::size_t min_samples_split = 2;
  std::size_t features_per_split = 0;  // 0 selects max(1, floor(sqrt(n_features)))
  bool bootstrap = true;
  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Flat tree node; children are indices into Tree::nodes, -1 for leaves.
struct TreeNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  double p_ats = 0;    // weighted ATS fraction of the training samples at the node
  double weight = 0;   // number of (bootstrap) training samples at the node
  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0
  std::size_t depth() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

/// A row-major labelled sample set. Labels are 1 for ATS, 0 for Non-ATS.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t n_features() const { return feature_names.size(); }
};

struct Prediction {
  int label = 0;
  double score = 0;
};

struct Explanation {
  double bias = 0;
  std::vector<double> contributions;
  double score = 0;
};

class TreeEnsembleModel {
 public:
  std::string feature_set;
  std::vector<std::string> feature_names;
  Hyperparams hyperparams;
  std::uint64_t seed = 0;
  std::size_t class_counts[2] = {0, 0};  // Non-ATS, ATS
  std::vector<Tree> trees;

  Prediction predict(const std::vector<double>& row) const;
  std::vector<Prediction> predict_all(const std::vector<std::vector<double>>& rows) const;
  Explanation explain(const std::vector<double>& row) const;

  /// Per-feature share of the entropy decrease, in percent (sums to 100
  /// unless the model has no splits, in which case every entry is 0).
  std::vector<double> feature_importance() const;

  /// Empty iff the structural model invariants hold.
  std::vector<std::string> check_invariants() const;

  friend bool operator==(const TreeEnsembleModel&, const TreeEnsembleModel&) = default;
};

/// Throws SingleClassTraining unless both classes are present and there are
/// at least two samples. Trees are trained on up to `jobs` threads; the
/// result is independent of `jobs`.
TreeEnsembleModel train(const Dataset& data, const Hyperparams& params, std::uint64_t seed,
                        const std::string& feature_set = {}, std::size_t jobs = 1);

Prediction predict(const TreeEnsembleModel& model, const std::vector<double>& row);
Explanation explain_prediction(const TreeEnsembleModel& model, const std::vector<double>& row);

nlohmann::json model_to_json(const TreeEnsembleModel& model);
TreeEnsembleModel model_from_json(const nlohmann::json& j);

/// Deterministic shuffle followed by contiguous chunks; fold sizes differ by
/// at most one. Each fold is returned sorted.
std::vector<std::vector<std::string>> kfold_split(std::vector<std::string> page_ids, std::size_t k,
                                                  std::uint64_t seed);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;   // percent
  double precision() const;  // percent, 0 when nothing was predicted ATS
  double recall() const;     // percent, 0 when there are no ATS samples
  Confusion& operator+=(const Confusion& o);
};

struct MeanStd {
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for fewer than two values
};
MeanStd mean_std(const std::vector<double>& values);

struct FoldResult {
  std::vector<std::string> test_pages;
  Confusion confusion;
};

struct EvalReport {
  std::vector<FoldResult> folds;
  Confusion total;
  MeanStd accuracy, precision, recall;
};

struct ImportanceEntry {
  std::string feature;
  FeatureCategory category = FeatureCategory::Structure;
  MeanStd gain;  // percent
};
using ImportanceReport = std::vector<ImportanceEntry>;  // ranked, highest first

/// One page's rows, labels and the graph node each row belongs to.
struct PageSamples {
  std::string page_id;
  std::vector<NodeId> node_ids;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
};

struct PagePrediction {
  std::string page_id;
  NodeId node = 0;
  int label = 0;
  Prediction prediction;
  std::size_t fold = 0;
};

struct CrossValidation {
  EvalReport report;
  ImportanceReport importance;
  std::vector<std::vector<double>> fold_importances;  // per fold, per feature
  std::vector<TreeEnsembleModel> models;              // one per fold
  std::vector<std::vector<std::string>> folds;
  std::vector<PagePrediction> predictions;  // held-out predictions, fold order
};

/// Page-disjoint k-fold cross-validation.
CrossValidation cross_validate(const std::vector<PageSamples>& pages,
                               const std::vector<std::string>& feature_names,
                               const std::string& feature_set, const Hyperparams& params,
                               std::size_t k, std::uint64_t seed, std::size_t jobs = 1);

EvalReport summarize_folds(std::vector<FoldResult> folds);
ImportanceReport rank_importances(const std::vector<std::string>& feature_names,
                                  const std::vector<std::vector<double>>& per_fold);

nlohmann::json eval_report_to_json(const EvalReport& report);
nlohmann::json importance_to_json(const ImportanceReport& report);
std::string eval_report_csv(const EvalReport& report);
std::string importance_csv(const ImportanceReport& report);

}  // namespace webgraph
