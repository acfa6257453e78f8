#pragma once

// Cohort language models: CBOW word embeddings with negative sampling,
// cross-model keyword comparison, the two-proportion z-test, and keyword
// similarity graphs.

#include "trollscope/corpus.hpp"
#include "trollscope/louvain.hpp"
#include "trollscope/random.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trollscope {

struct CbowConfig {
  int dim = 100;
  int window = 20;
  int negatives = 5;
  int epochs = 5;
  std::size_t min_count = 5;
  double learning_rate = 0.025;
  std::uint64_t rng_seed = 1;
};

using Sentence = std::vector<std::string>;

class EmbeddingModel {
public:
  CbowConfig config;
  std::vector<std::string> words;     // by descending count, then lexicographic
  std::vector<std::uint64_t> counts;
  Eigen::MatrixXd vectors;            // |V| x dim input embeddings
  Eigen::MatrixXd output;             // |V| x dim output embeddings (training state)
  std::vector<double> epoch_loss;     // mean per-example loss of each epoch

  std::size_t size() const { return words.size(); }
  /// -1 when absent.
  long index_of(std::string_view word) const;
  bool contains(std::string_view word) const { return index_of(word) >= 0; }

  void rebuild_index();

private:
  StringMap<long> index_;
};

/// Vocabulary of words seen at least min_count times. Throws EmptyVocabulary.
EmbeddingModel build_vocabulary(std::span<const Sentence> corpus, const CbowConfig& config);

/// One CBOW training example: target word, context words (with repetition),
/// and negative samples.
struct CbowExample {
  long target = 0;
  std::vector<long> context;
  std::vector<long> negatives;
};

/// Sparse gradient of the per-example loss. Every occurrence of a context
/// word receives `per_context`, so input row c gets occurrences(c) times it.
struct CbowGradient {
  Eigen::RowVectorXd per_context;
  std::vector<std::pair<long, int>> context;  // distinct word, occurrences
  std::vector<std::pair<long, Eigen::RowVectorXd>> output;  // distinct word, gradient
};

/// -log σ(u_t·h) - Σ_n log σ(-u_n·h) with h the mean of the context input
/// vectors. Fills `grad` (with respect to input and output vectors) when given.
double cbow_example_loss(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output, const CbowExample& example,
                         CbowGradient* grad);

/// Single-threaded and deterministic given config.rng_seed. Throws EmptyVocabulary.
EmbeddingModel train_cbow(std::span<const Sentence> corpus, const CbowConfig& config);

/// Tokenized posts of the given authors, one sentence per post.
std::vector<Sentence> cohort_sentences(const CorpusStore& store, std::span<const std::string> authors);

[[noreturn]] void throw_dimension_mismatch(long a, long b);

/// u·v/(|u||v|), 0 when either is all-zero. Throws DimensionMismatch.
template <typename A, typename B>
double cosine_similarity(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v);

/// Plain-vector overload; throws DimensionMismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct Neighbor {
  std::string word;
  double cosine = 0;
};

/// Throws OutOfVocabulary.
std::vector<Neighbor> top_k_similar(const EmbeddingModel& model, std::string_view word, std::size_t k = 100);

/// Sorted union of each model's top-k neighbors of the keyword; models that
/// lack the keyword contribute nothing.
std::vector<std::string> shared_neighbor_words(std::span<const EmbeddingModel* const> models, std::string_view keyword,
                                               std::size_t k = 100);

/// Component i is cosine(keyword, shared_words[i]) in this model, 0 when the
/// shared word is not in the vocabulary. Throws OutOfVocabulary for the keyword.
Eigen::VectorXd keyword_similarity_vector(const EmbeddingModel& model, std::string_view keyword,
                                          std::span<const std::string> shared_words);

/// Cosine between the two models' similarity vectors over their shared words.
double compare_models(const EmbeddingModel& a, const EmbeddingModel& b, std::string_view keyword, std::size_t k = 100);

struct ZTest {
  double z = 0;
  double p_value = 1;
};

/// Pooled two-proportion z-test with a two-sided normal p-value.
ZTest two_proportion_ztest(double p1, std::uint64_t n1, double p2, std::uint64_t n2);

/// Number of sentences containing the word.
std::uint64_t sentences_containing(std::span<const Sentence> corpus, std::string_view word);

struct SimilarityGraph {
  std::string keyword;
  double threshold = 0;
  std::vector<std::string> nodes;  // sorted
  std::vector<WeightedEdge> edges;  // indexes into nodes, a < b, sorted
  std::vector<int> community;
  double modularity = 0;
};

/// Nodes within two hops of the keyword in the graph whose edges join words
/// with cosine >= threshold; edges are all such pairs among those nodes.
SimilarityGraph build_similarity_graph(const EmbeddingModel& model, std::string_view keyword, double threshold);

/// Threshold chosen by bisection so the node count lands in target ± 10%
/// (closest achievable count otherwise).
SimilarityGraph build_similarity_graph_for_size(const EmbeddingModel& model, std::string_view keyword,
                                                std::size_t target_nodes = 100);

/// Runs Louvain and stores the partition in the graph.
void assign_communities(SimilarityGraph& graph);

std::string format_graphml(const SimilarityGraph& graph);

std::string serialize_embedding(const EmbeddingModel& model);
EmbeddingModel deserialize_embedding(std::string_view text);

// ---------------------------------------------------------------------------

template <typename A, typename B>
double cosine_similarity(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  if (u.size() != v.size()) throw_dimension_mismatch(u.size(), v.size());
  double nu = u.norm(), nv = v.norm();
  if (nu == 0 || nv == 0) return 0.0;
  double c = u.cwiseProduct(v).sum() / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace trollscope
