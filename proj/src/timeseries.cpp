#include "trollscope/timeseries.hpp"

#include "trollscope/error.hpp"
#include "trollscope/features.hpp"
#include "trollscope/text.hpp"

#include <algorithm>
#include <cmath>

namespace trollscope {

DailySeries build_series(const CorpusStore& store, const std::set<std::string>& accounts, PostKind kind,
                         std::int64_t first_day, std::int64_t last_day, std::string cohort) {
  if (last_day < first_day) throw Error(ErrorCode::InvalidArgument, "day range is empty");
  DailySeries s;
  s.start_day = first_day;
  s.kind = kind;
  s.cohort = std::move(cohort);
  s.values = Eigen::VectorXd::Zero(last_day - first_day + 1);
  for (const auto& a : accounts)
    for (auto i : store.by_author(a)) {
      const Post& p = store.at(i);
      if (p.kind != kind) continue;
      std::int64_t d = utc_day(p.created_utc);
      if (d >= first_day && d <= last_day) s.values(d - first_day) += 1;
    }
  return s;
}

std::optional<double> pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "series lengths differ");
  if (a.size() < 2) throw Error(ErrorCode::TooFewRows, "Pearson needs at least two points");
  Eigen::VectorXd x = a.array() - a.mean();
  Eigen::VectorXd y = b.array() - b.mean();
  double sxx = x.squaredNorm(), syy = y.squaredNorm();
  if (!(sxx > 0) || !(syy > 0)) return std::nullopt;
  return std::clamp(x.dot(y) / std::sqrt(sxx * syy), -1.0, 1.0);
}

LagResult xcorr_lag(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                    int max_lag) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "series lengths differ");
  if (max_lag < 0 || a.size() <= 2 * static_cast<Eigen::Index>(max_lag))
    throw Error(ErrorCode::InvalidArgument, "series must be longer than twice the maximum lag");
  const Eigen::Index n = a.size();
  std::optional<LagResult> best;
  // Visit 0, -1, +1, -2, +2, ... so a strict improvement test keeps the
  // preferred lag on ties.
  for (int step = 0; step <= 2 * max_lag; ++step) {
    int lag = step == 0 ? 0 : (step % 2 ? -(step + 1) / 2 : step / 2);
    Eigen::Index overlap = n - std::abs(lag);
    if (overlap < kMinLagOverlap) continue;
    Eigen::Index start_a = lag >= 0 ? 0 : -lag;
    Eigen::Index start_b = lag >= 0 ? lag : 0;
    auto r = pearson(a.segment(start_a, overlap), b.segment(start_b, overlap));
    if (!r) continue;
    if (!best || *r > best->correlation) best = LagResult{lag, *r};
  }
  if (!best) throw Error(ErrorCode::ZeroVariance, "no shift has a defined correlation");
  return *best;
}

std::string_view to_string(FractionMetric m) {
  switch (m) {
    case FractionMetric::CommentedOnStartedBySameClass: return "commented_on_started_by_same_class";
    case FractionMetric::CoCommented: return "co_commented";
    case FractionMetric::SameTitle: return "same_title";
  }
  return "?";
}

std::vector<double> fraction_distribution(const CorpusStore& store, std::span<const std::string> accounts,
                                          FractionMetric metric) {
  SeedSet cls;
  cls.names.insert(accounts.begin(), accounts.end());
  SeedContext ctx(store, cls);
  std::vector<double> out;
  out.reserve(accounts.size());
  for (const auto& a : accounts) {
    FeatureVector f = extract_features(a, store, ctx, store.max_created_utc());
    switch (metric) {
      case FractionMetric::CommentedOnStartedBySameClass: out.push_back(f.frac_on_troll_submissions); break;
      case FractionMetric::CoCommented: out.push_back(f.frac_cocommented); break;
      case FractionMetric::SameTitle: out.push_back(f.frac_same_title); break;
    }
  }
  return out;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "KS statistic needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < x.size() && j < y.size()) {
    double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

EngagementComparison engagement_comparison(const CorpusStore& store, std::span<const std::string> accounts_a,
                                           std::span<const std::string> accounts_b) {
  EngagementComparison r;
  auto tally = [&](std::span<const std::string> accounts, std::size_t& n, std::int64_t& total) {
    for (const auto& a : accounts)
      for (auto i : store.by_author(a))
        if (store.at(i).is_comment()) {
          ++n;
          total += store.at(i).score;
        }
  };
  tally(accounts_a, r.comments_a, r.total_score_a);
  tally(accounts_b, r.comments_b, r.total_score_b);
  if (r.comments_a == 0 || r.comments_b == 0) throw Error(ErrorCode::EmptyCohort, "a cohort has no comments");
  r.mean_score_a = static_cast<double>(r.total_score_a) / static_cast<double>(r.comments_a);
  r.mean_score_b = static_cast<double>(r.total_score_b) / static_cast<double>(r.comments_b);
  return r;
}

std::string format_series_csv(const DailySeries& s) {
  std::string out = "day,count\n";
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    out += format_day(s.start_day + i) + "," + std::to_string(static_cast<std::int64_t>(s.values(i))) + "\n";
  return out;
}

}  // namespace trollscope
