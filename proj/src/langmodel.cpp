#include "trollscope/langmodel.hpp"

#include "trollscope/error.hpp"
#include "trollscope/text.hpp"
#include "trollscope/validate.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace trollscope {

void throw_dimension_mismatch(long a, long b) {
  throw Error(ErrorCode::DimensionMismatch,
              "vectors have different dimensions: " + std::to_string(a) + " vs " + std::to_string(b));
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  Eigen::Map<const Eigen::VectorXd> a(u.data(), static_cast<Eigen::Index>(u.size()));
  Eigen::Map<const Eigen::VectorXd> b(v.data(), static_cast<Eigen::Index>(v.size()));
  return cosine_similarity(a, b);
}

long EmbeddingModel::index_of(std::string_view word) const {
  auto it = index_.find(word);
  return it == index_.end() ? -1 : it->second;
}

void EmbeddingModel::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < words.size(); ++i) index_.emplace(words[i], static_cast<long>(i));
}

EmbeddingModel build_vocabulary(std::span<const Sentence> corpus, const CbowConfig& config) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& s : corpus)
    for (const auto& w : s) ++counts[w];
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : counts)
    if (c >= config.min_count) kept.emplace_back(w, c);
  if (kept.empty()) throw Error(ErrorCode::EmptyVocabulary, "no word reaches min_count");
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  EmbeddingModel m;
  m.config = config;
  for (auto& [w, c] : kept) {
    m.words.push_back(w);
    m.counts.push_back(c);
  }
  m.rebuild_index();
  return m;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// -log σ(x), computed without overflow.
double neg_log_sigmoid(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

}  // namespace

double cbow_example_loss(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output, const CbowExample& ex,
                         CbowGradient* grad) {
  if (ex.context.empty()) throw Error(ErrorCode::InvalidArgument, "CBOW example without context");
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(input.cols());
  for (long c : ex.context) h += input.row(c);
  h /= static_cast<double>(ex.context.size());

  double loss = 0;
  Eigen::RowVectorXd dh = Eigen::RowVectorXd::Zero(input.cols());
  std::map<long, Eigen::RowVectorXd> dout;
  auto term = [&](long word, double label) {
    double x = output.row(word).dot(h);
    loss += label > 0 ? neg_log_sigmoid(x) : neg_log_sigmoid(-x);
    if (!grad) return;
    double g = sigmoid(x) - label;
    dh += g * output.row(word);
    auto [it, fresh] = dout.try_emplace(word, g * h);
    if (!fresh) it->second += g * h;
  };
  term(ex.target, 1.0);
  for (long n : ex.negatives) term(n, 0.0);

  if (grad) {
    grad->per_context = dh / static_cast<double>(ex.context.size());
    std::map<long, int> occ;
    for (long c : ex.context) ++occ[c];
    grad->context.assign(occ.begin(), occ.end());
    grad->output.clear();
    for (auto& [w, g] : dout) grad->output.emplace_back(w, std::move(g));
  }
  return loss;
}

EmbeddingModel train_cbow(std::span<const Sentence> corpus, const CbowConfig& config) {
  if (config.dim <= 0 || config.window <= 0 || config.negatives < 0 || config.epochs < 0 || !(config.learning_rate > 0))
    throw Error(ErrorCode::InvalidConfig, "invalid CBOW configuration");
  EmbeddingModel m = build_vocabulary(corpus, config);
  const auto v = static_cast<Eigen::Index>(m.size());
  const Eigen::Index d = config.dim;

  Rng rng(config.rng_seed);
  m.vectors.resize(v, d);
  for (Eigen::Index i = 0; i < v; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m.vectors(i, j) = uniform_real(rng, -0.5 / static_cast<double>(d), 0.5 / static_cast<double>(d));
  m.output = Eigen::MatrixXd::Zero(v, d);

  std::vector<double> noise(static_cast<std::size_t>(v));
  double acc = 0;
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = acc += std::pow(static_cast<double>(m.counts[i]), 0.75);
  auto draw_noise = [&] {
    double u = uniform_unit(rng) * acc;
    auto it = std::upper_bound(noise.begin(), noise.end(), u);
    return static_cast<long>(std::min<std::ptrdiff_t>(it - noise.begin(), v - 1));
  };

  std::vector<std::vector<long>> encoded;
  std::uint64_t tokens = 0;
  for (const auto& s : corpus) {
    std::vector<long> e;
    for (const auto& w : s)
      if (long i = m.index_of(w); i >= 0) e.push_back(i);
    tokens += e.size();
    if (e.size() > 1) encoded.push_back(std::move(e));
  }

  const double total = static_cast<double>(tokens) * config.epochs + 1;
  std::uint64_t processed = 0;
  CbowExample ex;
  CbowGradient grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0;
    std::uint64_t examples = 0;
    for (const auto& s : encoded) {
      const long len = static_cast<long>(s.size());
      for (long i = 0; i < len; ++i) {
        double lr = config.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(processed++) / total);
        ex.target = s[static_cast<std::size_t>(i)];
        ex.context.clear();
        for (long j = std::max(0L, i - config.window); j <= std::min(len - 1, i + config.window); ++j)
          if (j != i) ex.context.push_back(s[static_cast<std::size_t>(j)]);
        ex.negatives.clear();
        for (int k = 0; k < config.negatives; ++k)
          if (long n = draw_noise(); n != ex.target) ex.negatives.push_back(n);
        loss_sum += cbow_example_loss(m.vectors, m.output, ex, &grad);
        ++examples;
        for (auto& [w, g] : grad.output) m.output.row(w) -= lr * g;
        for (auto [c, occ] : grad.context) m.vectors.row(c) -= (lr * occ) * grad.per_context;
      }
    }
    m.epoch_loss.push_back(examples ? loss_sum / static_cast<double>(examples) : 0.0);
  }
  return m;
}

std::vector<Sentence> cohort_sentences(const CorpusStore& store, std::span<const std::string> authors) {
  std::vector<Sentence> out;
  for (const auto& a : authors)
    for (const Post& p : store.query(QueryKind::ByAuthor, a)) {
      auto tokens = tokenize(post_text(p));
      if (!tokens.empty()) out.push_back(std::move(tokens));
    }
  return out;
}

namespace {

double word_cosine(const EmbeddingModel& m, long a, long b) {
  return cosine_similarity(m.vectors.row(a), m.vectors.row(b));
}

long require_word(const EmbeddingModel& m, std::string_view word) {
  long i = m.index_of(word);
  if (i < 0) throw Error(ErrorCode::OutOfVocabulary, "word not in vocabulary: " + std::string(word));
  return i;
}

}  // namespace

std::vector<Neighbor> top_k_similar(const EmbeddingModel& model, std::string_view word, std::size_t k) {
  long q = require_word(model, word);
  std::vector<std::pair<double, long>> sims;
  for (long i = 0; i < static_cast<long>(model.size()); ++i)
    if (i != q) sims.emplace_back(word_cosine(model, q, i), i);
  auto better = [&](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first
                              : model.words[static_cast<std::size_t>(a.second)] < model.words[static_cast<std::size_t>(b.second)];
  };
  k = std::min(k, sims.size());
  std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(), better);
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back({model.words[static_cast<std::size_t>(sims[i].second)], sims[i].first});
  return out;
}

std::vector<std::string> shared_neighbor_words(std::span<const EmbeddingModel* const> models, std::string_view keyword,
                                               std::size_t k) {
  std::set<std::string> all;
  for (const auto* m : models) {
    if (!m->contains(keyword)) continue;
    for (auto& n : top_k_similar(*m, keyword, k)) all.insert(n.word);
  }
  return {all.begin(), all.end()};
}

Eigen::VectorXd keyword_similarity_vector(const EmbeddingModel& model, std::string_view keyword,
                                          std::span<const std::string> shared_words) {
  long q = require_word(model, keyword);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shared_words.size()));
  for (std::size_t i = 0; i < shared_words.size(); ++i)
    if (long w = model.index_of(shared_words[i]); w >= 0) out(static_cast<Eigen::Index>(i)) = word_cosine(model, q, w);
  return out;
}

double compare_models(const EmbeddingModel& a, const EmbeddingModel& b, std::string_view keyword, std::size_t k) {
  const EmbeddingModel* both[] = {&a, &b};
  auto shared = shared_neighbor_words(both, keyword, k);
  return cosine_similarity(keyword_similarity_vector(a, keyword, shared), keyword_similarity_vector(b, keyword, shared));
}

ZTest two_proportion_ztest(double p1, std::uint64_t n1, double p2, std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) throw Error(ErrorCode::InvalidArgument, "z-test needs positive sample sizes");
  if (!(p1 >= 0 && p1 <= 1 && p2 >= 0 && p2 <= 1)) throw Error(ErrorCode::InvalidArgument, "proportions must lie in [0,1]");
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  const double pooled = (p1 * a + p2 * b) / (a + b);
  const double se = std::sqrt(pooled * (1 - pooled) * (1 / a + 1 / b));
  if (!(se > 0)) return {0.0, 1.0};
  ZTest t;
  t.z = (p1 - p2) / se;
  t.p_value = std::erfc(std::abs(t.z) / std::sqrt(2.0));
  return t;
}

std::uint64_t sentences_containing(std::span<const Sentence> corpus, std::string_view word) {
  std::uint64_t n = 0;
  for (const auto& s : corpus) n += std::find(s.begin(), s.end(), word) != s.end();
  return n;
}

// ---------------------------------------------------------------------------
// Similarity graphs

namespace {

class GraphBuilder {
public:
  GraphBuilder(const EmbeddingModel& m, long keyword) : m_(m), keyword_(keyword) {}

  const std::vector<double>& row(long a) {
    auto it = rows_.find(a);
    if (it != rows_.end()) return it->second;
    std::vector<double> r(m_.size());
    for (long b = 0; b < static_cast<long>(r.size()); ++b) r[static_cast<std::size_t>(b)] = word_cosine(m_, a, b);
    return rows_.emplace(a, std::move(r)).first->second;
  }

  // Nodes within two hops; stops early once more than `limit` are found.
  std::set<long> nodes(double t, std::size_t limit) {
    std::set<long> out{keyword_};
    const auto& kr = row(keyword_);
    std::vector<std::pair<double, long>> hop1;
    for (long b = 0; b < static_cast<long>(kr.size()); ++b)
      if (b != keyword_ && kr[static_cast<std::size_t>(b)] >= t) hop1.emplace_back(kr[static_cast<std::size_t>(b)], b);
    std::sort(hop1.begin(), hop1.end(), [](auto& x, auto& y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
    for (auto [s, b] : hop1) out.insert(b);
    for (auto [s, b] : hop1) {
      if (out.size() > limit) break;
      const auto& r = row(b);
      for (long c = 0; c < static_cast<long>(r.size()); ++c)
        if (c != b && r[static_cast<std::size_t>(c)] >= t) out.insert(c);
    }
    return out;
  }

  SimilarityGraph build(double t) {
    SimilarityGraph g;
    g.keyword = m_.words[static_cast<std::size_t>(keyword_)];
    g.threshold = t;
    auto ids = nodes(t, std::numeric_limits<std::size_t>::max());
    std::vector<long> order(ids.begin(), ids.end());
    std::sort(order.begin(), order.end(), [&](long a, long b) {
      return m_.words[static_cast<std::size_t>(a)] < m_.words[static_cast<std::size_t>(b)];
    });
    for (long id : order) g.nodes.push_back(m_.words[static_cast<std::size_t>(id)]);
    for (std::size_t i = 0; i < order.size(); ++i)
      for (std::size_t j = i + 1; j < order.size(); ++j) {
        double s = word_cosine(m_, order[i], order[j]);
        if (s >= t) g.edges.push_back({static_cast<int>(i), static_cast<int>(j), s});
      }
    return g;
  }

private:
  const EmbeddingModel& m_;
  long keyword_;
  std::unordered_map<long, std::vector<double>> rows_;
};

}  // namespace

SimilarityGraph build_similarity_graph(const EmbeddingModel& model, std::string_view keyword, double threshold) {
  GraphBuilder b(model, require_word(model, keyword));
  return b.build(threshold);
}

SimilarityGraph build_similarity_graph_for_size(const EmbeddingModel& model, std::string_view keyword,
                                                std::size_t target_nodes) {
  GraphBuilder b(model, require_word(model, keyword));
  const std::size_t lower = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(target_nodes)));
  const std::size_t upper = static_cast<std::size_t>(std::floor(1.1 * static_cast<double>(target_nodes)));
  double lo = -1.0, hi = 1.0 + 1e-9;
  double best_t = hi;
  std::size_t best_gap = std::numeric_limits<std::size_t>::max();
  for (int iter = 0; iter < 60; ++iter) {
    double mid = lo + (hi - lo) / 2;
    std::size_t n = b.nodes(mid, upper + 1).size();
    std::size_t gap = n < lower ? lower - n : n > upper ? n - upper : 0;
    if (gap < best_gap || (gap == best_gap && mid > best_t)) {
      best_gap = gap;
      best_t = mid;
    }
    if (gap == 0) break;
    (n > upper ? lo : hi) = mid;
  }
  return b.build(best_t);
}

void assign_communities(SimilarityGraph& graph) {
  auto r = louvain_communities(static_cast<int>(graph.nodes.size()), graph.edges);
  graph.community = std::move(r.community);
  graph.modularity = r.modularity;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string hexd(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

std::string format_graphml(const SimilarityGraph& g) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      << "  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
      << "  <key id=\"community\" for=\"node\" attr.name=\"community\" attr.type=\"int\"/>\n"
      << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
      << "  <graph id=\"" << xml_escape(g.keyword) << "\" edgedefault=\"undirected\">\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    out << "    <node id=\"n" << i << "\"><data key=\"label\">" << xml_escape(g.nodes[i]) << "</data>";
    if (i < g.community.size()) out << "<data key=\"community\">" << g.community[i] << "</data>";
    out << "</node>\n";
  }
  for (const auto& e : g.edges)
    out << "    <edge source=\"n" << e.a << "\" target=\"n" << e.b << "\"><data key=\"weight\">"
        << format_double(e.weight) << "</data></edge>\n";
  out << "  </graph>\n</graphml>\n";
  return out.str();
}

std::string serialize_embedding(const EmbeddingModel& m) {
  std::ostringstream out;
  const auto& c = m.config;
  out << "trollscope-embedding 1\n"
      << "dim " << c.dim << " window " << c.window << " negatives " << c.negatives << " epochs " << c.epochs
      << " min_count " << c.min_count << " learning_rate " << hexd(c.learning_rate) << " rng_seed " << c.rng_seed
      << "\n"
      << "vocabulary " << m.size() << "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.words[i] << ' ' << m.counts[i];
    for (Eigen::Index j = 0; j < m.vectors.cols(); ++j) out << ' ' << hexd(m.vectors(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
  return out.str();
}

EmbeddingModel deserialize_embedding(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto fail = [] { throw Error(ErrorCode::MalformedRecord, "malformed embedding file"); };
  std::string tag, key;
  int version = 0;
  if (!(in >> tag >> version) || tag != "trollscope-embedding" || version != 1) fail();
  EmbeddingModel m;
  auto& c = m.config;
  std::string lr;
  if (!(in >> key >> c.dim >> key >> c.window >> key >> c.negatives >> key >> c.epochs >> key >> c.min_count >> key >>
        lr >> key >> c.rng_seed))
    fail();
  c.learning_rate = std::strtod(lr.c_str(), nullptr);
  std::size_t n = 0;
  if (!(in >> key >> n) || key != "vocabulary") fail();
  m.vectors.resize(static_cast<Eigen::Index>(n), c.dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::string w;
    std::uint64_t count = 0;
    if (!(in >> w >> count)) fail();
    m.words.push_back(w);
    m.counts.push_back(count);
    for (int j = 0; j < c.dim; ++j) {
      std::string v;
      if (!(in >> v)) fail();
      m.vectors(static_cast<Eigen::Index>(i), j) = std::strtod(v.c_str(), nullptr);
    }
  }
  m.rebuild_index();
  return m;
}

}  // namespace trollscope
