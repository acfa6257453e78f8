#pragma once

// From-scratch supervised models (KNN, CART, random forest, linear SVM),
// balanced training sets, stratified cross-validation and detection.

#include "trollscope/features.hpp"
#include "trollscope/prefilter.hpp"
#include "trollscope/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trollscope {

enum class Label : int { Benign = 0, Troll = 1 };
enum class ModelKind { KNN, DecisionTree, RandomForest, LinearSVM };

std::string_view to_string(Label label);
std::string_view to_string(ModelKind kind);
/// Accepts "knn", "decision_tree"/"DecisionTree", "random_forest", "linear_svm" (case-insensitive).
ModelKind parse_model_kind(std::string_view text);

struct Hyperparams {
  std::size_t knn_k = 5;
  std::size_t max_depth = 0;     // 0 = unlimited
  std::size_t min_leaf = 1;
  std::size_t n_trees = 100;
  std::size_t max_features = 3;  // per split, random forest only; 0 = all
  bool bootstrap = true;
  double svm_lambda = 1e-4;
  std::size_t svm_steps = 100'000;
  double threshold = 0.5;
  unsigned threads = 1;          // forest training only; never changes results
};

struct TrainingSet {
  std::vector<std::string> accounts;
  Eigen::MatrixXd features;  // rows x dims
  std::vector<Label> labels;
  std::string seed_label;
  std::uint64_t negative_sampling_seed = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t count(Label l) const;
  TrainingSet subset(std::span<const std::size_t> rows) const;
};

/// Positives first, then negatives.
TrainingSet make_training_set(const FeatureTable& positives, const FeatureTable& negatives);
std::string format_training_csv(const TrainingSet& set);
TrainingSet parse_training_csv(std::string_view csv);

/// n distinct names drawn uniformly from candidates minus seed minus
/// `exclude` (e.g. suspended accounts); sorted. Throws InsufficientCandidates.
std::vector<std::string> sample_negative_class(const CandidateSet& candidates, const SeedSet& seed, std::size_t n,
                                               const std::function<bool(const std::string&)>& exclude,
                                               std::uint64_t rng_seed);

/// Per-feature standardization; zero-variance features get unit scale.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  template <typename Derived>
  Eigen::RowVectorXd apply(const Eigen::MatrixBase<Derived>& row) const {
    return (row - mean).cwiseQuotient(scale);
  }
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& x) const;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double troll_fraction = 0;
  std::uint64_t samples = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// CART with Gini impurity. Split quality is compared exactly in integer
/// arithmetic; ties go to the lowest feature index, then the lowest threshold.
class DecisionTree {
public:
  struct Params {
    std::size_t max_depth = 0;
    std::size_t min_leaf = 1;
    std::size_t max_features = 0;  // 0 = consider every feature at each split
  };

  /// `sample` lists training rows with multiplicity (a bootstrap draw or all rows).
  /// `rng` is only consumed when max_features restricts the feature set.
  static DecisionTree fit(const Eigen::MatrixXd& x, std::span<const Label> y, std::span<const std::uint32_t> sample,
                          const Params& params, Rng* rng);

  template <typename Derived>
  double score(const Eigen::MatrixBase<Derived>& row) const {
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
      const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
      i = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].troll_fraction;
  }

  /// Number of split levels on the longest root-to-leaf path (a single leaf is 0).
  int depth() const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& mutable_nodes() { return nodes_; }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
  std::vector<TreeNode> nodes_;
};

/// Bootstrap draw of n rows used for forest tree `index`.
std::vector<std::uint32_t> bootstrap_sample(Rng& rng, std::size_t n);

struct Model {
  ModelKind kind = ModelKind::RandomForest;
  Hyperparams params;
  std::uint64_t rng_seed = 0;
  Standardizer scaling;  // KNN and LinearSVM

  Eigen::MatrixXd knn_points;  // standardized training rows
  std::vector<Label> knn_labels;
  std::vector<DecisionTree> trees;  // one for DecisionTree, n_trees for RandomForest
  Eigen::VectorXd svm_weights;      // standardized dims + bias

  std::size_t dims() const { return static_cast<std::size_t>(scaling.mean.size()); }
};

struct Prediction {
  Label label = Label::Benign;
  double score = 0;  // in [0, 1]
};

/// Throws DegenerateLabels if fewer than two rows or a single class.
Model train(ModelKind kind, const TrainingSet& set, const Hyperparams& params, std::uint64_t rng_seed);

Prediction predict(const Model& model, const Eigen::Ref<const Eigen::RowVectorXd>& row);
Prediction predict(const Model& model, const FeatureVector& fv);

/// Self-describing text container; doubles are written as hex floats so a
/// reloaded model predicts bit-identically.
std::string serialize_model(const Model& model);
Model deserialize_model(std::string_view text);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  void add(Label truth, Label predicted);
  std::size_t total() const { return tp + fp + tn + fn; }
  double precision() const;
  double recall() const;
  double accuracy() const;
  double f1() const;
};

struct FoldResult {
  Confusion confusion;
  double precision = 0, recall = 0, accuracy = 0, f1 = 0;
};

struct CVReport {
  ModelKind kind = ModelKind::RandomForest;
  std::size_t k_folds = 10;
  std::uint64_t fold_seed = 0;
  std::vector<FoldResult> folds;
  double mean_precision = 0, mean_recall = 0, mean_accuracy = 0, mean_f1 = 0;
};

/// Stratified k-fold; throws TooFewRows when a class has fewer than k rows.
CVReport cross_validate(ModelKind kind, const TrainingSet& set, const Hyperparams& params, std::size_t k_folds,
                        std::uint64_t rng_seed);
std::string format_cv_report_json(const CVReport& report);

struct Detection {
  std::string account;
  double score = 0;
  Label label = Label::Benign;
};

/// One verdict per candidate, sorted by descending score then name.
std::vector<Detection> detect(const Model& model, std::span<const std::string> candidates, const CorpusStore& store,
                              const SeedSet& seed, std::int64_t reference_utc);
std::vector<Detection> detect(const Model& model, const FeatureTable& table);

/// "account,score,label" CSV.
std::string format_detection_csv(std::span<const Detection> detections);
std::vector<Detection> parse_detection_csv(std::string_view csv);

}  // namespace trollscope
