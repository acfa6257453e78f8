#pragma once

// The nine behavioral features of an account relative to a seed set.

#include "trollscope/corpus.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace trollscope {

inline constexpr int kFeatureCount = 9;
inline constexpr double kSecondsPerYear = 31'557'600.0;  // 365.25 days

using FeatureRow = Eigen::Matrix<double, 1, kFeatureCount>;

struct FeatureVector {
  std::size_t total_comments = 0;                      // f1
  std::size_t total_submissions = 0;                   // f2
  double account_age_years = 0;                        // f3
  double frac_same_title = 0;                          // f4, over submissions
  double frac_cocommented = 0;                         // f5, over comments
  double frac_on_troll_submissions = 0;                // f6
  double frac_direct_replies_on_troll_submissions = 0; // f7
  double frac_replies_to_troll_comments = 0;           // f8
  double frac_replies_to_troll_comments_in_troll_submissions = 0;  // f9
  bool no_archived_posts = false;  // flag, not a feature

  FeatureRow row() const;
  static FeatureVector from_row(const FeatureRow& r);

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

extern const std::array<std::string_view, kFeatureCount> kFeatureNames;

/// Precomputed seed lookups. Each key remembers up to two distinct seed
/// owners so a seed account's own activity can be excluded when its features
/// are computed (leave-self-out); for accounts outside the seed this is the
/// plain definition.
class SeedContext {
public:
  SeedContext(const CorpusStore& store, const SeedSet& seed);

  struct Owners {
    std::string first;
    int count = 0;  // saturates at 2
    void add(std::string_view name);
    bool other_than(std::string_view self) const { return count >= 2 || (count == 1 && first != self); }
  };

  bool troll_submission(std::string_view id, std::string_view self) const { return has(submissions_, id, self); }
  bool troll_comment(std::string_view id, std::string_view self) const { return has(comments_, id, self); }
  bool troll_commented_submission(std::string_view id, std::string_view self) const {
    return has(commented_submissions_, id, self);
  }
  bool troll_title(std::string_view normalized, std::string_view self) const { return has(titles_, normalized, self); }

private:
  static bool has(const StringMap<Owners>& m, std::string_view key, std::string_view self) {
    auto it = m.find(key);
    return it != m.end() && it->second.other_than(self);
  }

  StringMap<Owners> submissions_;
  StringMap<Owners> comments_;
  StringMap<Owners> commented_submissions_;
  StringMap<Owners> titles_;
};

FeatureVector extract_features(std::string_view account, const CorpusStore& store, const SeedContext& context,
                               std::int64_t reference_utc);
FeatureVector extract_features(std::string_view account, const CorpusStore& store, const SeedSet& seed,
                               std::int64_t reference_utc);

struct FeatureTable {
  std::vector<std::string> accounts;
  std::vector<FeatureVector> rows;

  /// n x 9 design matrix.
  Eigen::MatrixXd matrix() const;
  std::size_t missing_count() const;
};

/// Row i equals extract_features(accounts[i]); deterministic for any thread count.
FeatureTable extract_matrix(std::span<const std::string> accounts, const CorpusStore& store, const SeedSet& seed,
                            std::int64_t reference_utc, unsigned threads = 1);

/// CSV with the header "account,f1_...,...,f9_..." and exact round-trip values.
std::string format_feature_csv(const FeatureTable& table);
FeatureTable parse_feature_csv(std::string_view csv);

}  // namespace trollscope
