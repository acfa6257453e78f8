#include "oracles.hpp"

#include "trollscope/error.hpp"
#include "trollscope/langmodel.hpp"

#include <doctest.h>

#include <cmath>

using namespace trollscope;

namespace {

std::vector<Sentence> two_cluster_corpus(std::uint64_t seed, std::size_t sentences) {
  const std::vector<std::string> a = {"apple", "banana", "cherry", "grape", "lemon", "mango"};
  const std::vector<std::string> b = {"engine", "piston", "gearbox", "clutch", "brake", "tyre"};
  Rng rng(seed);
  std::vector<Sentence> out;
  for (std::size_t i = 0; i < sentences; ++i) {
    const auto& words = i % 2 ? b : a;
    Sentence s;
    for (int j = 0; j < 8; ++j) s.push_back(words[uniform_index(rng, words.size())]);
    out.push_back(s);
  }
  return out;
}

EmbeddingModel planted_model(std::uint64_t seed, std::size_t n, int dim) {
  Rng rng(seed);
  EmbeddingModel m;
  m.vectors.resize(static_cast<Eigen::Index>(n), dim);
  for (std::size_t i = 0; i < n; ++i) {
    m.words.push_back("w" + std::to_string(1000 + i));
    m.counts.push_back(1);
    for (int d = 0; d < dim; ++d) m.vectors(static_cast<Eigen::Index>(i), d) = uniform_real(rng, -1, 1) + (d == 0 ? 0.8 : 0.0);
  }
  m.output = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), dim);
  m.rebuild_index();
  return m;
}

}  // namespace

TEST_CASE("vocabulary is ordered by count then word") {
  std::vector<Sentence> c = {{"b", "a", "a", "c"}, {"b", "c", "d"}, {"a"}};
  CbowConfig cfg;
  cfg.min_count = 2;
  EmbeddingModel m = build_vocabulary(c, cfg);
  CHECK(m.words == std::vector<std::string>{"a", "b", "c"});
  CHECK(m.counts == std::vector<std::uint64_t>{3, 2, 2});
  CHECK(m.index_of("d") == -1);
  cfg.min_count = 10;
  CHECK_THROWS_AS(build_vocabulary(c, cfg), Error);
}

TEST_CASE("analytic CBOW gradients match central differences") {
  Rng rng(17);
  const int V = 9, D = 6;
  const double h = 1e-6;
  int probes = 0;
  double worst = 0;
  while (probes < 100) {
    Eigen::MatrixXd in(V, D), out(V, D);
    for (int i = 0; i < V; ++i)
      for (int d = 0; d < D; ++d) {
        in(i, d) = uniform_real(rng, -0.8, 0.8);
        out(i, d) = uniform_real(rng, -0.8, 0.8);
      }
    CbowExample ex;
    ex.target = static_cast<long>(uniform_index(rng, V));
    for (int i = 0; i < 4; ++i) ex.context.push_back(static_cast<long>(uniform_index(rng, V)));
    ex.context.push_back(ex.context.front());  // repeated context word
    for (int i = 0; i < 3; ++i) ex.negatives.push_back(static_cast<long>((ex.target + 1 + uniform_index(rng, V - 1)) % V));

    CbowGradient g;
    cbow_example_loss(in, out, ex, &g);
    for (const auto& [word, occ] : g.context) {
      int d = static_cast<int>(uniform_index(rng, D));
      Eigen::MatrixXd p = in, m = in;
      p(word, d) += h;
      m(word, d) -= h;
      double numeric = (cbow_example_loss(p, out, ex, nullptr) - cbow_example_loss(m, out, ex, nullptr)) / (2 * h);
      double analytic = occ * g.per_context(d);
      double rel = std::abs(numeric - analytic) / std::max(1e-6, std::abs(numeric) + std::abs(analytic));
      worst = std::max(worst, rel);
      ++probes;
    }
    for (const auto& [word, grad] : g.output) {
      int d = static_cast<int>(uniform_index(rng, D));
      Eigen::MatrixXd p = out, m = out;
      p(word, d) += h;
      m(word, d) -= h;
      double numeric = (cbow_example_loss(in, p, ex, nullptr) - cbow_example_loss(in, m, ex, nullptr)) / (2 * h);
      double rel = std::abs(numeric - grad(d)) / std::max(1e-6, std::abs(numeric) + std::abs(grad(d)));
      worst = std::max(worst, rel);
      ++probes;
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("CBOW separates two topic clusters and the loss falls") {
  auto corpus = two_cluster_corpus(3, 400);
  CbowConfig cfg;
  cfg.dim = 20;
  cfg.window = 4;
  cfg.epochs = 8;
  cfg.min_count = 1;
  EmbeddingModel m = train_cbow(corpus, cfg);
  REQUIRE(m.epoch_loss.size() == 8);
  CHECK(m.epoch_loss.back() < m.epoch_loss.front());

  const std::vector<std::string> a = {"apple", "banana", "cherry", "grape", "lemon", "mango"};
  const std::vector<std::string> b = {"engine", "piston", "gearbox", "clutch", "brake", "tyre"};
  auto cos = [&](const std::string& x, const std::string& y) {
    return cosine_similarity(m.vectors.row(m.index_of(x)), m.vectors.row(m.index_of(y)));
  };
  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (const auto* group : {&a, &b})
    for (std::size_t i = 0; i < group->size(); ++i)
      for (std::size_t j = i + 1; j < group->size(); ++j, ++ni) intra += cos((*group)[i], (*group)[j]);
  for (const auto& x : a)
    for (const auto& y : b) {
      inter += cos(x, y);
      ++nx;
    }
  CHECK(intra / ni > inter / nx);

  auto near = top_k_similar(m, "apple", 5);
  REQUIRE(near.size() == 5);
  for (const auto& n : near) CHECK(std::find(a.begin(), a.end(), n.word) != a.end());

  EmbeddingModel same = train_cbow(corpus, cfg);
  CHECK(same.vectors == m.vectors);
  CHECK(compare_models(m, same, "apple", 5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(top_k_similar(m, "unicorn"), Error);

  EmbeddingModel back = deserialize_embedding(serialize_embedding(m));
  CHECK(back.words == m.words);
  CHECK(back.vectors == m.vectors);
  CHECK(back.index_of("apple") == m.index_of("apple"));
}

TEST_CASE("cosine similarity") {
  std::vector<double> u = {1, 0}, v = {0, 2}, z = {0, 0}, w = {1, 2, 3};
  CHECK(cosine_similarity(u, v) == 0.0);
  CHECK(cosine_similarity(u, u) == doctest::Approx(1.0));
  CHECK(cosine_similarity(u, z) == 0.0);
  CHECK_THROWS_AS(cosine_similarity(u, w), Error);
}

TEST_CASE("two proportion z-test hand case") {
  // Pooled p = 0.5, se = sqrt(0.25 * (1/100 + 1/100)).
  ZTest t = two_proportion_ztest(0.6, 100, 0.4, 100);
  double z = 0.2 / std::sqrt(0.25 * 0.02);
  CHECK(std::abs(t.z - z) < 1e-9);
  CHECK(std::abs(t.z - 2.8284271247461903) < 1e-9);
  CHECK(std::abs(t.p_value - std::erfc(2.0)) < 1e-9);
  ZTest same = two_proportion_ztest(0.3, 50, 0.3, 80);
  CHECK(same.z == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));
  CHECK(two_proportion_ztest(0, 10, 0, 10).p_value == 1.0);
  CHECK_THROWS_AS(two_proportion_ztest(1.5, 10, 0.5, 10), Error);
  CHECK_THROWS_AS(two_proportion_ztest(0.5, 0, 0.5, 10), Error);
}

TEST_CASE("similarity graph equals brute-force thresholding with two hops") {
  for (std::uint64_t seed : {1, 2, 3}) {
    EmbeddingModel m = planted_model(seed, 60, 4);
    std::vector<std::vector<double>> vecs;
    for (Eigen::Index i = 0; i < m.vectors.rows(); ++i) {
      std::vector<double> r;
      for (Eigen::Index d = 0; d < m.vectors.cols(); ++d) r.push_back(m.vectors(i, d));
      vecs.push_back(r);
    }
    for (double t : {0.95, 0.9, 0.8}) {
      SimilarityGraph g = build_similarity_graph(m, m.words[0], t);
      auto [nodes, edges] = oracle::brute_similarity_graph(m.words, vecs, m.words[0], t);
      CHECK(g.nodes == nodes);
      std::set<std::pair<std::string, std::string>> got;
      for (const auto& e : g.edges) got.emplace(g.nodes[static_cast<std::size_t>(e.a)], g.nodes[static_cast<std::size_t>(e.b)]);
      CHECK(got == edges);
    }
  }
}

TEST_CASE("bisection reaches the target node count") {
  EmbeddingModel m = planted_model(7, 400, 8);
  for (std::size_t target : {20, 50, 100}) {
    SimilarityGraph g = build_similarity_graph_for_size(m, m.words[3], target);
    CHECK(g.nodes.size() >= static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(target))));
    CHECK(g.nodes.size() <= static_cast<std::size_t>(std::floor(1.1 * static_cast<double>(target))));
    assign_communities(g);
    CHECK(g.community.size() == g.nodes.size());
    std::string xml = format_graphml(g);
    CHECK(xml.find("<graphml") != std::string::npos);
    CHECK(xml.find(m.words[3]) != std::string::npos);
  }
}

TEST_CASE("shared neighbor words and similarity vectors") {
  EmbeddingModel a = planted_model(1, 30, 4), b = planted_model(2, 30, 4);
  std::vector<const EmbeddingModel*> both = {&a, &b};
  auto shared = shared_neighbor_words(both, "w1000", 5);
  CHECK(std::is_sorted(shared.begin(), shared.end()));
  CHECK(shared.size() >= 5);
  CHECK(shared.size() <= 10);
  Eigen::VectorXd v = keyword_similarity_vector(a, "w1000", shared);
  CHECK(v.size() == static_cast<Eigen::Index>(shared.size()));
  CHECK(compare_models(a, b, "w1000", 5) <= 1.0);
}

TEST_CASE("sentences containing a word") {
  std::vector<Sentence> c = {{"a", "b"}, {"b", "b"}, {"c"}};
  CHECK(sentences_containing(c, "b") == 2);
  CHECK(sentences_containing(c, "z") == 0);
}
