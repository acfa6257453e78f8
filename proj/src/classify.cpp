#include "trollscope/classify.hpp"

#include "trollscope/error.hpp"
#include "trollscope/text.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <thread>

namespace trollscope {

std::string_view to_string(Label label) { return label == Label::Troll ? "troll" : "benign"; }

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::KNN: return "KNN";
    case ModelKind::DecisionTree: return "DecisionTree";
    case ModelKind::RandomForest: return "RandomForest";
    case ModelKind::LinearSVM: return "LinearSVM";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string t;
  for (char c : text)
    if (c != '_' && c != '-') t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "knn") return ModelKind::KNN;
  if (t == "decisiontree" || t == "tree") return ModelKind::DecisionTree;
  if (t == "randomforest" || t == "forest" || t == "rf") return ModelKind::RandomForest;
  if (t == "linearsvm" || t == "svm") return ModelKind::LinearSVM;
  throw Error(ErrorCode::InvalidConfig, "unknown classifier: " + std::string(text));
}

// ---------------------------------------------------------------------------
// Training sets

std::size_t TrainingSet::count(Label l) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

TrainingSet TrainingSet::subset(std::span<const std::size_t> rows) const {
  TrainingSet s;
  s.seed_label = seed_label;
  s.negative_sampling_seed = negative_sampling_seed;
  s.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    s.labels.push_back(labels[rows[i]]);
    if (!accounts.empty()) s.accounts.push_back(accounts[rows[i]]);
  }
  return s;
}

TrainingSet make_training_set(const FeatureTable& positives, const FeatureTable& negatives) {
  TrainingSet s;
  const std::size_t n = positives.rows.size() + negatives.rows.size();
  s.features.resize(static_cast<Eigen::Index>(n), kFeatureCount);
  std::size_t r = 0;
  for (const auto* table : {&positives, &negatives}) {
    Label l = table == &positives ? Label::Troll : Label::Benign;
    for (std::size_t i = 0; i < table->rows.size(); ++i, ++r) {
      s.accounts.push_back(table->accounts[i]);
      s.features.row(static_cast<Eigen::Index>(r)) = table->rows[i].row();
      s.labels.push_back(l);
    }
  }
  return s;
}

std::string format_training_csv(const TrainingSet& set) {
  std::string out = "account,label";
  for (auto name : kFeatureNames) out += "," + std::string(name);
  out += '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    out += set.accounts.empty() ? std::to_string(i) : set.accounts[i];
    out += ',';
    out += to_string(set.labels[i]);
    for (Eigen::Index j = 0; j < set.features.cols(); ++j) out += "," + format_double(set.features(static_cast<Eigen::Index>(i), j));
    out += '\n';
  }
  return out;
}

TrainingSet parse_training_csv(std::string_view csv) {
  TrainingSet s;
  std::vector<std::vector<double>> rows;
  bool header = true;
  for (const auto& raw : split(csv, '\n')) {
    auto line = trim(raw);
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto cells = split(line, ',');
    if (cells.size() < 3) throw Error(ErrorCode::MalformedRecord, "training CSV row too short");
    s.accounts.push_back(cells[0]);
    if (cells[1] == "troll") s.labels.push_back(Label::Troll);
    else if (cells[1] == "benign") s.labels.push_back(Label::Benign);
    else throw Error(ErrorCode::MalformedRecord, "bad label: " + cells[1]);
    std::vector<double> v;
    for (std::size_t j = 2; j < cells.size(); ++j) v.push_back(std::strtod(cells[j].c_str(), nullptr));
    if (!rows.empty() && v.size() != rows.front().size()) throw Error(ErrorCode::MalformedRecord, "ragged training CSV");
    rows.push_back(std::move(v));
  }
  const Eigen::Index d = rows.empty() ? kFeatureCount : static_cast<Eigen::Index>(rows.front().size());
  s.features.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < d; ++j) s.features(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return s;
}

std::vector<std::string> sample_negative_class(const CandidateSet& candidates, const SeedSet& seed, std::size_t n,
                                               const std::function<bool(const std::string&)>& exclude,
                                               std::uint64_t rng_seed) {
  std::vector<std::string> eligible;
  for (const auto& name : candidates.all)  // std::set: already sorted
    if (!seed.contains(name) && !(exclude && exclude(name))) eligible.push_back(name);
  if (eligible.size() < n)
    throw Error(ErrorCode::InsufficientCandidates, "need " + std::to_string(n) + " negatives, only " +
                                                       std::to_string(eligible.size()) + " eligible");
  Rng rng(rng_seed);
  auto picked = sample_without_replacement(std::move(eligible), n, rng);
  std::sort(picked.begin(), picked.end());
  return picked;
}

// ---------------------------------------------------------------------------
// Standardization

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - s.mean;
  s.scale = (centered.colwise().squaredNorm() / n).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 0)) s.scale(j) = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply_rows(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = x.rowwise() - mean;
  return out.array().rowwise() / scale.array();
}

// ---------------------------------------------------------------------------
// CART

namespace {

using i128 = __int128;

struct WeightedRow {
  std::uint32_t row;
  std::uint64_t weight;
};

struct Counts {
  std::uint64_t troll = 0, total = 0;
};

// Larger is better: sum over children of (troll^2 + benign^2) / n, kept as a
// fraction so comparisons are exact.
struct SplitQuality {
  i128 num = 0;
  i128 den = 1;

  static SplitQuality of(Counts l, Counts r) {
    auto sq = [](Counts c) {
      i128 t = c.troll, b = c.total - c.troll;
      return t * t + b * b;
    };
    return {sq(l) * static_cast<i128>(r.total) + sq(r) * static_cast<i128>(l.total),
            static_cast<i128>(l.total) * static_cast<i128>(r.total)};
  }
  bool better_than(const SplitQuality& o) const { return num * o.den > o.num * den; }
};

struct BestSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0;
  SplitQuality quality;
};

void search_feature(const Eigen::MatrixXd& x, std::span<const Label> y, std::vector<WeightedRow>& rows, int f,
                    Counts all, std::size_t min_leaf, BestSplit& best) {
  std::stable_sort(rows.begin(), rows.end(), [&](const WeightedRow& a, const WeightedRow& b) {
    return x(a.row, f) < x(b.row, f);
  });
  Counts left;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    left.total += rows[i].weight;
    if (y[rows[i].row] == Label::Troll) left.troll += rows[i].weight;
    double v = x(rows[i].row, f), next = x(rows[i + 1].row, f);
    if (!(v < next)) continue;
    Counts right{all.troll - left.troll, all.total - left.total};
    if (left.total < min_leaf || right.total < min_leaf) continue;
    double threshold = v + (next - v) / 2;
    if (!(threshold < next)) threshold = v;
    SplitQuality q = SplitQuality::of(left, right);
    if (!best.found || q.better_than(best.quality)) best = {true, f, threshold, q};
  }
}

}  // namespace

std::vector<std::uint32_t> bootstrap_sample(Rng& rng, std::size_t n) {
  std::vector<std::uint32_t> s(n);
  for (auto& v : s) v = static_cast<std::uint32_t>(uniform_index(rng, n));
  return s;
}

DecisionTree DecisionTree::fit(const Eigen::MatrixXd& x, std::span<const Label> y,
                               std::span<const std::uint32_t> sample, const Params& params, Rng* rng) {
  const int dims = static_cast<int>(x.cols());
  std::vector<std::uint64_t> mult(static_cast<std::size_t>(x.rows()), 0);
  for (auto r : sample) ++mult[r];
  std::vector<WeightedRow> root;
  for (std::uint32_t r = 0; r < mult.size(); ++r)
    if (mult[r]) root.push_back({r, mult[r]});

  DecisionTree tree;
  struct Pending {
    int node;
    std::vector<WeightedRow> rows;
    std::size_t depth;
  };
  std::vector<Pending> stack;
  tree.nodes_.emplace_back();
  stack.push_back({0, std::move(root), 0});

  std::vector<int> all_features(static_cast<std::size_t>(dims));
  std::iota(all_features.begin(), all_features.end(), 0);

  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    Counts c;
    for (const auto& wr : p.rows) {
      c.total += wr.weight;
      if (y[wr.row] == Label::Troll) c.troll += wr.weight;
    }
    TreeNode& node = tree.nodes_[static_cast<std::size_t>(p.node)];
    node.samples = c.total;
    node.troll_fraction = c.total ? static_cast<double>(c.troll) / static_cast<double>(c.total) : 0.0;

    bool pure = c.troll == 0 || c.troll == c.total;
    if (pure || (params.max_depth && p.depth >= params.max_depth) || c.total < 2 * params.min_leaf) continue;

    std::vector<int> tried;
    if (params.max_features && params.max_features < static_cast<std::size_t>(dims) && rng) {
      tried = sample_without_replacement(all_features, params.max_features, *rng);
      std::sort(tried.begin(), tried.end());
    } else {
      tried = all_features;
    }
    BestSplit best;
    for (int f : tried) search_feature(x, y, p.rows, f, c, params.min_leaf, best);
    if (!best.found && tried.size() < all_features.size()) {
      // Every drawn feature was constant here; fall back to the rest.
      for (int f : all_features)
        if (!std::binary_search(tried.begin(), tried.end(), f)) search_feature(x, y, p.rows, f, c, params.min_leaf, best);
    }
    if (!best.found) continue;

    std::vector<WeightedRow> left, right;
    for (const auto& wr : p.rows) (x(wr.row, best.feature) <= best.threshold ? left : right).push_back(wr);
    std::sort(left.begin(), left.end(), [](auto& a, auto& b) { return a.row < b.row; });
    std::sort(right.begin(), right.end(), [](auto& a, auto& b) { return a.row < b.row; });

    int li = static_cast<int>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    int ri = static_cast<int>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    TreeNode& parent = tree.nodes_[static_cast<std::size_t>(p.node)];
    parent.feature = best.feature;
    parent.threshold = best.threshold;
    parent.left = li;
    parent.right = ri;
    // Right pushed first so the left subtree is expanded (and numbered) first.
    stack.push_back({ri, std::move(right), p.depth + 1});
    stack.push_back({li, std::move(left), p.depth + 1});
  }
  return tree;
}

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      best = std::max(best, d);
    } else {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Training and prediction

namespace {

double logistic(double m) { return 1.0 / (1.0 + std::exp(-m)); }

void train_svm(Model& m, const TrainingSet& set) {
  Eigen::MatrixXd xs = m.scaling.apply_rows(set.features);
  const Eigen::Index d = xs.cols();
  Eigen::MatrixXd aug(xs.rows(), d + 1);
  aug << xs, Eigen::VectorXd::Ones(xs.rows());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  const double lambda = m.params.svm_lambda;
  const double radius = 1.0 / std::sqrt(lambda);
  Rng rng(m.rng_seed);
  for (std::size_t t = 1; t <= m.params.svm_steps; ++t) {
    auto i = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(aug.rows())));
    double yi = set.labels[static_cast<std::size_t>(i)] == Label::Troll ? 1.0 : -1.0;
    double eta = 1.0 / (lambda * static_cast<double>(t));
    double margin = yi * aug.row(i).dot(w);
    w *= 1.0 - eta * lambda;
    if (margin < 1.0) w += (eta * yi) * aug.row(i).transpose();
    double norm = w.norm();
    if (norm > radius) w *= radius / norm;
  }
  m.svm_weights = w;
}

}  // namespace

Model train(ModelKind kind, const TrainingSet& set, const Hyperparams& params, std::uint64_t rng_seed) {
  if (set.size() < 2 || set.count(Label::Troll) == 0 || set.count(Label::Benign) == 0)
    throw Error(ErrorCode::DegenerateLabels, "training needs at least two rows and both labels");
  if (static_cast<std::size_t>(set.features.rows()) != set.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows and labels differ in length");

  Model m;
  m.kind = kind;
  m.params = params;
  m.rng_seed = rng_seed;
  m.scaling = Standardizer::fit(set.features);
  const std::size_t n = set.size();

  switch (kind) {
    case ModelKind::KNN:
      if (params.knn_k == 0) throw Error(ErrorCode::InvalidConfig, "knn_k must be positive");
      m.knn_points = m.scaling.apply_rows(set.features);
      m.knn_labels = set.labels;
      break;
    case ModelKind::DecisionTree: {
      std::vector<std::uint32_t> all(n);
      std::iota(all.begin(), all.end(), 0u);
      DecisionTree::Params tp{params.max_depth, params.min_leaf, 0};
      m.trees.push_back(DecisionTree::fit(set.features, set.labels, all, tp, nullptr));
      break;
    }
    case ModelKind::RandomForest: {
      if (params.n_trees == 0) throw Error(ErrorCode::InvalidConfig, "n_trees must be positive");
      m.trees.resize(params.n_trees);
      DecisionTree::Params tp{params.max_depth, params.min_leaf, params.max_features};
      std::atomic<std::size_t> next{0};
      auto work = [&] {
        for (std::size_t t = next++; t < params.n_trees; t = next++) {
          Rng rng = derive_rng(rng_seed, t);
          std::vector<std::uint32_t> sample;
          if (params.bootstrap) {
            sample = bootstrap_sample(rng, n);
          } else {
            sample.resize(n);
            std::iota(sample.begin(), sample.end(), 0u);
          }
          m.trees[t] = DecisionTree::fit(set.features, set.labels, sample, tp, &rng);
        }
      };
      std::vector<std::jthread> pool;
      for (unsigned t = 1; t < std::max(1u, params.threads); ++t) pool.emplace_back(work);
      work();
      break;
    }
    case ModelKind::LinearSVM:
      if (!(params.svm_lambda > 0)) throw Error(ErrorCode::InvalidConfig, "svm_lambda must be positive");
      train_svm(m, set);
      break;
  }
  return m;
}

Prediction predict(const Model& m, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (static_cast<std::size_t>(row.size()) != m.dims())
    throw Error(ErrorCode::DimensionMismatch, "feature row has wrong dimension");
  Prediction p;
  switch (m.kind) {
    case ModelKind::KNN: {
      Eigen::RowVectorXd q = m.scaling.apply(row);
      const std::size_t n = m.knn_labels.size();
      std::vector<std::pair<double, std::size_t>> dist(n);
      for (std::size_t i = 0; i < n; ++i)
        dist[i] = {(m.knn_points.row(static_cast<Eigen::Index>(i)) - q).squaredNorm(), i};
      const std::size_t k = std::min(m.params.knn_k, n);
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      std::size_t votes = 0;
      for (std::size_t i = 0; i < k; ++i) votes += m.knn_labels[dist[i].second] == Label::Troll;
      p.score = static_cast<double>(votes) / static_cast<double>(k);
      bool tie = 2 * votes == k;
      p.label = !tie && p.score >= m.params.threshold ? Label::Troll : Label::Benign;
      return p;
    }
    case ModelKind::DecisionTree:
      p.score = m.trees.front().score(row);
      break;
    case ModelKind::RandomForest: {
      std::size_t votes = 0;
      for (const auto& t : m.trees) votes += t.score(row) >= 0.5;
      p.score = static_cast<double>(votes) / static_cast<double>(m.trees.size());
      break;
    }
    case ModelKind::LinearSVM: {
      const Eigen::Index d = static_cast<Eigen::Index>(m.dims());
      double margin = m.scaling.apply(row).dot(m.svm_weights.head(d).transpose()) + m.svm_weights(d);
      p.score = logistic(margin);
      break;
    }
  }
  p.label = p.score >= m.params.threshold ? Label::Troll : Label::Benign;
  return p;
}

Prediction predict(const Model& model, const FeatureVector& fv) {
  Eigen::RowVectorXd row = fv.row();
  return predict(model, row);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string hexd(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

class Reader {
public:
  explicit Reader(std::string_view text) : in_(std::string(text)) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error(ErrorCode::MalformedRecord, "model file truncated");
    return w;
  }
  void expect(std::string_view w) {
    if (word() != w) throw Error(ErrorCode::MalformedRecord, "model file: expected " + std::string(w));
  }
  double real() {
    std::string w = word();
    char* end = nullptr;
    double v = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size()) throw Error(ErrorCode::MalformedRecord, "model file: bad number " + w);
    return v;
  }
  std::uint64_t uint() {
    std::string w = word();
    std::uint64_t v = 0;
    auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc{} || res.ptr != w.data() + w.size())
      throw Error(ErrorCode::MalformedRecord, "model file: bad integer " + w);
    return v;
  }
  long long integer() {
    std::string w = word();
    long long v = 0;
    auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc{}) throw Error(ErrorCode::MalformedRecord, "model file: bad integer " + w);
    return v;
  }

private:
  std::istringstream in_;
};

}  // namespace

std::string serialize_model(const Model& m) {
  std::ostringstream out;
  const auto& h = m.params;
  out << "trollscope-model 1\n";
  out << "kind " << to_string(m.kind) << "\n";
  out << "rng_seed " << m.rng_seed << "\n";
  out << "knn_k " << h.knn_k << "\nmax_depth " << h.max_depth << "\nmin_leaf " << h.min_leaf << "\nn_trees "
      << h.n_trees << "\nmax_features " << h.max_features << "\nbootstrap " << (h.bootstrap ? 1 : 0)
      << "\nsvm_lambda " << hexd(h.svm_lambda) << "\nsvm_steps " << h.svm_steps << "\nthreshold "
      << hexd(h.threshold) << "\n";
  out << "scaling " << m.scaling.mean.size();
  for (Eigen::Index j = 0; j < m.scaling.mean.size(); ++j) out << ' ' << hexd(m.scaling.mean(j));
  for (Eigen::Index j = 0; j < m.scaling.scale.size(); ++j) out << ' ' << hexd(m.scaling.scale(j));
  out << "\n";
  out << "knn " << m.knn_points.rows() << ' ' << m.knn_points.cols() << "\n";
  for (Eigen::Index i = 0; i < m.knn_points.rows(); ++i) {
    out << static_cast<int>(m.knn_labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.knn_points.cols(); ++j) out << ' ' << hexd(m.knn_points(i, j));
    out << "\n";
  }
  out << "trees " << m.trees.size() << "\n";
  for (const auto& t : m.trees) {
    out << "tree " << t.nodes().size() << "\n";
    for (const auto& n : t.nodes())
      out << n.feature << ' ' << hexd(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << hexd(n.troll_fraction)
          << ' ' << n.samples << "\n";
  }
  out << "svm " << m.svm_weights.size();
  for (Eigen::Index j = 0; j < m.svm_weights.size(); ++j) out << ' ' << hexd(m.svm_weights(j));
  out << "\nend\n";
  return out.str();
}

Model deserialize_model(std::string_view text) {
  Reader r(text);
  r.expect("trollscope-model");
  if (r.uint() != 1) throw Error(ErrorCode::MalformedRecord, "unsupported model version");
  Model m;
  auto& h = m.params;
  r.expect("kind");
  m.kind = parse_model_kind(r.word());
  r.expect("rng_seed");
  m.rng_seed = r.uint();
  r.expect("knn_k");
  h.knn_k = r.uint();
  r.expect("max_depth");
  h.max_depth = r.uint();
  r.expect("min_leaf");
  h.min_leaf = r.uint();
  r.expect("n_trees");
  h.n_trees = r.uint();
  r.expect("max_features");
  h.max_features = r.uint();
  r.expect("bootstrap");
  h.bootstrap = r.uint() != 0;
  r.expect("svm_lambda");
  h.svm_lambda = r.real();
  r.expect("svm_steps");
  h.svm_steps = r.uint();
  r.expect("threshold");
  h.threshold = r.real();
  r.expect("scaling");
  auto d = static_cast<Eigen::Index>(r.uint());
  m.scaling.mean.resize(d);
  m.scaling.scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) m.scaling.mean(j) = r.real();
  for (Eigen::Index j = 0; j < d; ++j) m.scaling.scale(j) = r.real();
  r.expect("knn");
  auto rows = static_cast<Eigen::Index>(r.uint());
  auto cols = static_cast<Eigen::Index>(r.uint());
  m.knn_points.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    m.knn_labels.push_back(r.uint() ? Label::Troll : Label::Benign);
    for (Eigen::Index j = 0; j < cols; ++j) m.knn_points(i, j) = r.real();
  }
  r.expect("trees");
  std::size_t nt = r.uint();
  for (std::size_t t = 0; t < nt; ++t) {
    r.expect("tree");
    std::size_t nn = r.uint();
    DecisionTree tree;
    auto& nodes = tree.mutable_nodes();
    for (std::size_t i = 0; i < nn; ++i) {
      TreeNode n;
      n.feature = static_cast<int>(r.integer());
      n.threshold = r.real();
      n.left = static_cast<int>(r.integer());
      n.right = static_cast<int>(r.integer());
      n.troll_fraction = r.real();
      n.samples = r.uint();
      nodes.push_back(n);
    }
    m.trees.push_back(std::move(tree));
  }
  r.expect("svm");
  auto ns = static_cast<Eigen::Index>(r.uint());
  m.svm_weights.resize(ns);
  for (Eigen::Index j = 0; j < ns; ++j) m.svm_weights(j) = r.real();
  r.expect("end");
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

void Confusion::add(Label truth, Label predicted) {
  if (truth == Label::Troll) (predicted == Label::Troll ? tp : fn)++;
  else (predicted == Label::Troll ? fp : tn)++;
}

double Confusion::precision() const { return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
double Confusion::recall() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
double Confusion::accuracy() const {
  return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
}
double Confusion::f1() const {
  double p = precision(), r = recall();
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

CVReport cross_validate(ModelKind kind, const TrainingSet& set, const Hyperparams& params, std::size_t k_folds,
                        std::uint64_t rng_seed) {
  if (k_folds < 2) throw Error(ErrorCode::InvalidConfig, "k_folds must be at least 2");
  if (set.count(Label::Troll) < k_folds || set.count(Label::Benign) < k_folds)
    throw Error(ErrorCode::TooFewRows, "each class needs at least k_folds rows");

  std::vector<std::size_t> fold_of(set.size());
  Rng rng(rng_seed);
  for (Label l : {Label::Troll, Label::Benign}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < set.size(); ++i)
      if (set.labels[i] == l) idx.push_back(i);
    shuffle_in_place(idx, rng);
    for (std::size_t j = 0; j < idx.size(); ++j) fold_of[idx[j]] = j % k_folds;
  }

  CVReport report;
  report.kind = kind;
  report.k_folds = k_folds;
  report.fold_seed = rng_seed;
  for (std::size_t f = 0; f < k_folds; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < set.size(); ++i) (fold_of[i] == f ? test_rows : train_rows).push_back(i);
    Model m = train(kind, set.subset(train_rows), params, splitmix64(rng_seed + f + 1));
    FoldResult fr;
    for (std::size_t i : test_rows)
      fr.confusion.add(set.labels[i], predict(m, set.features.row(static_cast<Eigen::Index>(i))).label);
    fr.precision = fr.confusion.precision();
    fr.recall = fr.confusion.recall();
    fr.accuracy = fr.confusion.accuracy();
    fr.f1 = fr.confusion.f1();
    report.folds.push_back(fr);
  }
  const double k = static_cast<double>(k_folds);
  for (const auto& fr : report.folds) {
    report.mean_precision += fr.precision / k;
    report.mean_recall += fr.recall / k;
    report.mean_accuracy += fr.accuracy / k;
    report.mean_f1 += fr.f1 / k;
  }
  return report;
}

std::string format_cv_report_json(const CVReport& r) {
  std::ostringstream out;
  out << "{\"kind\":\"" << to_string(r.kind) << "\",\"k_folds\":" << r.k_folds << ",\"fold_seed\":" << r.fold_seed
      << ",\"mean\":{\"precision\":" << format_double(r.mean_precision) << ",\"recall\":"
      << format_double(r.mean_recall) << ",\"accuracy\":" << format_double(r.mean_accuracy)
      << ",\"f1\":" << format_double(r.mean_f1) << "},\"folds\":[";
  for (std::size_t i = 0; i < r.folds.size(); ++i) {
    const auto& f = r.folds[i];
    out << (i ? "," : "") << "{\"tp\":" << f.confusion.tp << ",\"fp\":" << f.confusion.fp
        << ",\"tn\":" << f.confusion.tn << ",\"fn\":" << f.confusion.fn << ",\"precision\":"
        << format_double(f.precision) << ",\"recall\":" << format_double(f.recall)
        << ",\"accuracy\":" << format_double(f.accuracy) << ",\"f1\":" << format_double(f.f1) << "}";
  }
  out << "]}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Detection

std::vector<Detection> detect(const Model& model, const FeatureTable& table) {
  std::vector<Detection> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    Prediction p = predict(model, table.rows[i]);
    out.push_back({table.accounts[i], p.score, p.label});
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return a.score != b.score ? a.score > b.score : a.account < b.account;
  });
  return out;
}

std::vector<Detection> detect(const Model& model, std::span<const std::string> candidates, const CorpusStore& store,
                              const SeedSet& seed, std::int64_t reference_utc) {
  return detect(model, extract_matrix(candidates, store, seed, reference_utc));
}

std::string format_detection_csv(std::span<const Detection> detections) {
  std::string out = "account,score,label\n";
  for (const auto& d : detections) out += d.account + "," + format_double(d.score) + "," + std::string(to_string(d.label)) + "\n";
  return out;
}

std::vector<Detection> parse_detection_csv(std::string_view csv) {
  std::vector<Detection> out;
  bool header = true;
  for (const auto& raw : split(csv, '\n')) {
    auto line = trim(raw);
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto cells = split(line, ',');
    if (cells.size() != 3) throw Error(ErrorCode::MalformedRecord, "detection CSV row");
    out.push_back({cells[0], std::strtod(cells[1].c_str(), nullptr),
                   cells[2] == "troll" ? Label::Troll : Label::Benign});
  }
  return out;
}

}  // namespace trollscope
