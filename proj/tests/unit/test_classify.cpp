#include "oracles.hpp"

#include "trollscope/classify.hpp"
#include "trollscope/error.hpp"

#include <doctest.h>

using namespace trollscope;

namespace {

TrainingSet make_set(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  TrainingSet s;
  s.features = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    s.accounts.push_back("r" + std::to_string(i));
    s.labels.push_back(y[i] ? Label::Troll : Label::Benign);
  }
  return s;
}

/// Two noisy Gaussian-ish blobs in 9 dimensions.
TrainingSet blobs(std::size_t per_class, std::uint64_t seed, double gap = 1.5) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(2 * per_class), kFeatureCount);
  std::vector<int> y;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    int label = i < per_class ? 1 : 0;
    for (int j = 0; j < kFeatureCount; ++j) {
      double noise = uniform_real(rng, -1, 1) + uniform_real(rng, -1, 1);
      x(static_cast<Eigen::Index>(i), j) = noise + (label && j < 4 ? gap : 0.0);
    }
    y.push_back(label);
  }
  return make_set(x, y);
}

double train_accuracy(const Model& m, const TrainingSet& s) {
  std::size_t ok = 0;
  for (Eigen::Index i = 0; i < s.features.rows(); ++i)
    ok += predict(m, s.features.row(i)).label == s.labels[static_cast<std::size_t>(i)];
  return static_cast<double>(ok) / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("model kind names") {
  CHECK(parse_model_kind("random_forest") == ModelKind::RandomForest);
  CHECK(parse_model_kind("DecisionTree") == ModelKind::DecisionTree);
  CHECK(parse_model_kind("KNN") == ModelKind::KNN);
  CHECK(parse_model_kind("linear_svm") == ModelKind::LinearSVM);
  CHECK_THROWS_AS(parse_model_kind("perceptron"), Error);
}

TEST_CASE("depth-1 tree separates 1-D data") {
  Eigen::MatrixXd x(10, 1);
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    y.push_back(i >= 5);
  }
  TrainingSet s = make_set(x, y);
  Hyperparams hp;
  hp.max_depth = 1;
  Model m = train(ModelKind::DecisionTree, s, hp, 1);
  CHECK(train_accuracy(m, s) == 1.0);
  REQUIRE(m.trees.size() == 1);
  CHECK(m.trees[0].depth() == 1);
  CHECK(m.trees[0].nodes()[0].threshold == 4.5);
}

TEST_CASE("XOR needs depth 2") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  TrainingSet s = make_set(x, {0, 1, 1, 0});
  Hyperparams hp;
  hp.max_depth = 2;
  Model m = train(ModelKind::DecisionTree, s, hp, 1);
  CHECK(train_accuracy(m, s) == 1.0);
  hp.max_depth = 1;
  CHECK(train_accuracy(train(ModelKind::DecisionTree, s, hp, 1), s) < 1.0);
}

TEST_CASE("gini split choice matches an exhaustive search") {
  // Feature 1 splits cleanly, feature 0 does not.
  Eigen::MatrixXd x(6, 2);
  x << 1, 10, 2, 11, 3, 20, 1, 21, 2, 22, 3, 12;
  TrainingSet s = make_set(x, {0, 0, 1, 1, 1, 0});
  std::vector<std::uint32_t> all = {0, 1, 2, 3, 4, 5};
  DecisionTree t = DecisionTree::fit(x, s.labels, all, {1, 1, 0}, nullptr);
  const TreeNode& root = t.nodes()[0];
  CHECK(root.feature == 1);
  CHECK(root.threshold == 16.0);
  CHECK(t.nodes()[static_cast<std::size_t>(root.left)].troll_fraction == 0.0);
  CHECK(t.nodes()[static_cast<std::size_t>(root.right)].troll_fraction == 1.0);
}

TEST_CASE("min_leaf and pure nodes stop splitting") {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  TrainingSet s = make_set(x, {0, 1, 0, 1});
  Hyperparams hp;
  hp.min_leaf = 2;
  Model m = train(ModelKind::DecisionTree, s, hp, 1);
  for (const auto& n : m.trees[0].nodes())
    if (n.is_leaf()) CHECK(n.samples >= 2);
  Eigen::MatrixXd pure(3, 1);
  pure << 0, 1, 2;
  CHECK_THROWS_AS(train(ModelKind::DecisionTree, make_set(pure, {1, 1, 1}), {}, 1), Error);
}

TEST_CASE("knn votes") {
  Eigen::MatrixXd x(5, 1);
  x << 0, 1, 2, 10, 11;
  TrainingSet s = make_set(x, {0, 0, 0, 1, 1});
  Hyperparams hp;
  hp.knn_k = 3;
  Model m = train(ModelKind::KNN, s, hp, 1);
  Eigen::RowVectorXd q(1);
  q << 9;
  Prediction p = predict(m, q);
  CHECK(p.score == doctest::Approx(2.0 / 3.0));
  CHECK(p.label == Label::Troll);
  q << 0.5;
  CHECK(predict(m, q).label == Label::Benign);
}

TEST_CASE("every model separates well-separated blobs") {
  TrainingSet s = blobs(60, 3, 4.0);
  for (ModelKind k : {ModelKind::KNN, ModelKind::DecisionTree, ModelKind::RandomForest, ModelKind::LinearSVM}) {
    Model m = train(k, s, {}, 7);
    CHECK_MESSAGE(train_accuracy(m, s) >= 0.95, to_string(k));
    for (Eigen::Index i = 0; i < s.features.rows(); ++i) {
      double sc = predict(m, s.features.row(i)).score;
      CHECK((sc >= 0 && sc <= 1));
    }
  }
}

TEST_CASE("retraining is bit-identical and thread count does not matter") {
  TrainingSet s = blobs(50, 5);
  Hyperparams hp;
  hp.n_trees = 30;
  std::string a = serialize_model(train(ModelKind::RandomForest, s, hp, 99));
  std::string b = serialize_model(train(ModelKind::RandomForest, s, hp, 99));
  hp.threads = 4;
  std::string c = serialize_model(train(ModelKind::RandomForest, s, hp, 99));
  CHECK(a == b);
  CHECK(a == c);
  CHECK(a != serialize_model(train(ModelKind::RandomForest, s, hp, 100)));
}

TEST_CASE("serialization round trip preserves predictions exactly") {
  TrainingSet s = blobs(40, 8);
  TrainingSet probe = blobs(30, 9);
  for (ModelKind k : {ModelKind::KNN, ModelKind::DecisionTree, ModelKind::RandomForest, ModelKind::LinearSVM}) {
    Model m = train(k, s, {}, 3);
    Model r = deserialize_model(serialize_model(m));
    CHECK(serialize_model(r) == serialize_model(m));
    for (Eigen::Index i = 0; i < probe.features.rows(); ++i) {
      Prediction p = predict(m, probe.features.row(i)), q = predict(r, probe.features.row(i));
      CHECK(p.score == q.score);
      CHECK(p.label == q.label);
    }
  }
  CHECK_THROWS_AS(deserialize_model("not a model"), Error);
}

TEST_CASE("confusion metrics") {
  Confusion c;
  c.tp = 8;
  c.fp = 2;
  c.fn = 4;
  c.tn = 6;
  CHECK(c.precision() == doctest::Approx(0.8));
  CHECK(c.recall() == doctest::Approx(8.0 / 12.0));
  CHECK(c.accuracy() == doctest::Approx(0.7));
  CHECK(c.f1() == doctest::Approx(2 * 0.8 * (8.0 / 12.0) / (0.8 + 8.0 / 12.0)));
  Confusion empty;
  CHECK(empty.f1() == 0.0);
}

TEST_CASE("cross validation is stratified and deterministic") {
  TrainingSet s = blobs(25, 4);
  Hyperparams hp;
  hp.n_trees = 20;
  CVReport a = cross_validate(ModelKind::RandomForest, s, hp, 5, 11);
  CVReport b = cross_validate(ModelKind::RandomForest, s, hp, 5, 11);
  CHECK(format_cv_report_json(a) == format_cv_report_json(b));
  REQUIRE(a.folds.size() == 5);
  std::size_t total = 0;
  for (const auto& f : a.folds) {
    CHECK(f.confusion.tp + f.confusion.fn == 5);
    CHECK(f.confusion.tn + f.confusion.fp == 5);
    total += f.confusion.total();
  }
  CHECK(total == s.size());
  CHECK_THROWS_AS(cross_validate(ModelKind::RandomForest, blobs(3, 1), hp, 5, 1), Error);
}

TEST_CASE("negative class sampling") {
  CandidateSet c;
  for (int i = 0; i < 20; ++i) c.all.insert("c" + std::to_string(i));
  c.all.insert("seed1");
  SeedSet seed{{"seed1"}, "l"};
  auto no = [](const std::string& n) { return n == "c3"; };
  auto a = sample_negative_class(c, seed, 10, no, 5);
  CHECK(a == sample_negative_class(c, seed, 10, no, 5));
  CHECK(a.size() == 10);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::find(a.begin(), a.end(), "seed1") == a.end());
  CHECK(std::find(a.begin(), a.end(), "c3") == a.end());
  CHECK(sample_negative_class(c, seed, 19, no, 1).size() == 19);
  try {
    sample_negative_class(c, seed, 20, no, 1);
    FAIL("expected InsufficientCandidates");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientCandidates);
  }
}

TEST_CASE("standardizer handles constant columns") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  Standardizer st = Standardizer::fit(x);
  CHECK(st.scale(1) == 1.0);
  Eigen::MatrixXd z = st.apply_rows(x);
  CHECK(z.col(1).isZero());
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
}

TEST_CASE("training and detection files round trip") {
  TrainingSet s = blobs(5, 2);
  s.seed_label = "lbl";
  TrainingSet r = parse_training_csv(format_training_csv(s));
  CHECK(r.accounts == s.accounts);
  CHECK(r.labels == s.labels);
  CHECK(r.features == s.features);

  std::vector<Detection> d = {{"b", 0.5, Label::Troll}, {"a", 0.5, Label::Troll}, {"c", 0.1, Label::Benign}};
  auto back = parse_detection_csv(format_detection_csv(d));
  REQUIRE(back.size() == 3);
  CHECK(back[1].account == "a");
  CHECK(back[2].score == 0.1);
}

TEST_CASE("detect orders by score then name and handles no candidates") {
  TrainingSet s = blobs(30, 6, 4.0);
  FeatureTable t;
  for (Eigen::Index i = 0; i < s.features.rows(); ++i) {
    t.accounts.push_back("acct" + std::to_string(i % 7) + "_" + std::to_string(i));
    FeatureRow r = s.features.row(i).cwiseAbs();
    r(0) = std::floor(r(0) * 10);
    r(1) = std::floor(r(1) * 10);
    t.rows.push_back(FeatureVector::from_row(r));
  }
  s.features = t.matrix();
  Model m = train(ModelKind::RandomForest, s, {}, 1);
  auto d = detect(m, t);
  REQUIRE(d.size() == t.rows.size());
  for (std::size_t i = 1; i < d.size(); ++i)
    CHECK((d[i - 1].score > d[i].score || (d[i - 1].score == d[i].score && d[i - 1].account < d[i].account)));
  CHECK(detect(m, FeatureTable{}).empty());
}
