#pragma once

// Cohort activity series, correlation and lag, interaction-fraction
// distributions, the two-sample KS statistic, and engagement comparison.

#include "trollscope/corpus.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace trollscope {

struct DailySeries {
  std::int64_t start_day = 0;  // UTC day number
  Eigen::VectorXd values;      // one count per consecutive day, zero-filled
  std::string cohort;
  PostKind kind = PostKind::Comment;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Counts posts of `kind` by the accounts for each day in [first_day, last_day].
DailySeries build_series(const CorpusStore& store, const std::set<std::string>& accounts, PostKind kind,
                         std::int64_t first_day, std::int64_t last_day, std::string cohort = {});

/// Sample Pearson coefficient; nullopt when either side has zero variance.
/// Throws LengthMismatch for unequal lengths and TooFewRows below 2 points.
std::optional<double> pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

inline constexpr int kMinLagOverlap = 30;

/// Lag in [-max_lag, max_lag] maximizing the Pearson correlation of a[t]
/// against b[t + lag] over the overlapping days (positive: b lags a). Ties go
/// to the smallest |lag|, then the negative one. Shifts whose overlap is
/// shorter than kMinLagOverlap or has zero variance are skipped; throws
/// ZeroVariance if every shift is skipped.
struct LagResult {
  int lag = 0;
  double correlation = 0;
};
LagResult xcorr_lag(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                    int max_lag = 180);

enum class FractionMetric { CommentedOnStartedBySameClass, CoCommented, SameTitle };
std::string_view to_string(FractionMetric m);

/// Per-account fraction against the other members of the same class (in
/// the order given).
std::vector<double> fraction_distribution(const CorpusStore& store, std::span<const std::string> accounts,
                                          FractionMetric metric);

/// sup_x |ECDF_a(x) - ECDF_b(x)|. Throws EmptySample.
double ks_statistic(std::span<const double> a, std::span<const double> b);

struct EngagementComparison {
  std::size_t comments_a = 0, comments_b = 0;
  std::int64_t total_score_a = 0, total_score_b = 0;
  double mean_score_a = 0, mean_score_b = 0;
};

/// Mean comment score per cohort. Throws EmptyCohort.
EngagementComparison engagement_comparison(const CorpusStore& store, std::span<const std::string> accounts_a,
                                           std::span<const std::string> accounts_b);

/// "day,count" CSV with YYYY-MM-DD days.
std::string format_series_csv(const DailySeries& series);

}  // namespace trollscope
