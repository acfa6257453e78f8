#include "trollscope/features.hpp"

#include "trollscope/error.hpp"
#include "trollscope/text.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <thread>

namespace trollscope {

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "f1_total_comments",
    "f2_total_submissions",
    "f3_account_age_years",
    "f4_frac_same_title",
    "f5_frac_cocommented",
    "f6_frac_on_troll_submissions",
    "f7_frac_direct_replies_on_troll_submissions",
    "f8_frac_replies_to_troll_comments",
    "f9_frac_replies_to_troll_comments_in_troll_submissions",
};

FeatureRow FeatureVector::row() const {
  FeatureRow r;
  r << static_cast<double>(total_comments), static_cast<double>(total_submissions), account_age_years,
      frac_same_title, frac_cocommented, frac_on_troll_submissions, frac_direct_replies_on_troll_submissions,
      frac_replies_to_troll_comments, frac_replies_to_troll_comments_in_troll_submissions;
  return r;
}

FeatureVector FeatureVector::from_row(const FeatureRow& r) {
  FeatureVector f;
  f.total_comments = static_cast<std::size_t>(r(0));
  f.total_submissions = static_cast<std::size_t>(r(1));
  f.account_age_years = r(2);
  f.frac_same_title = r(3);
  f.frac_cocommented = r(4);
  f.frac_on_troll_submissions = r(5);
  f.frac_direct_replies_on_troll_submissions = r(6);
  f.frac_replies_to_troll_comments = r(7);
  f.frac_replies_to_troll_comments_in_troll_submissions = r(8);
  f.no_archived_posts = f.total_comments == 0 && f.total_submissions == 0;
  return f;
}

void SeedContext::Owners::add(std::string_view name) {
  if (count == 0) {
    first = std::string(name);
    count = 1;
  } else if (count == 1 && name != first) {
    count = 2;
  }
}

SeedContext::SeedContext(const CorpusStore& store, const SeedSet& seed) {
  for (const auto& troll : seed.names) {
    for (auto i : store.by_author(troll)) {
      const Post& p = store.at(i);
      if (p.is_comment()) {
        comments_[p.id].add(troll);
        commented_submissions_[*p.link_id].add(troll);
      } else {
        submissions_[p.id].add(troll);
        titles_[normalize_title(*p.title)].add(troll);
      }
    }
  }
}

FeatureVector extract_features(std::string_view account, const CorpusStore& store, const SeedContext& ctx,
                               std::int64_t reference_utc) {
  FeatureVector f;
  auto rows = store.by_author(account);
  if (rows.empty()) {
    f.no_archived_posts = true;
    return f;
  }

  std::int64_t first = store.at(rows.front()).created_utc;
  std::size_t same_title = 0, cocommented = 0, on_troll = 0, direct = 0, reply_troll = 0, reply_troll_in_troll = 0;
  for (auto i : rows) {
    const Post& p = store.at(i);
    first = std::min(first, p.created_utc);
    if (!p.is_comment()) {
      ++f.total_submissions;
      if (ctx.troll_title(normalize_title(*p.title), account)) ++same_title;
      continue;
    }
    ++f.total_comments;
    bool on_troll_submission = ctx.troll_submission(*p.link_id, account);
    bool reply_to_troll = ctx.troll_comment(*p.parent_id, account);
    if (ctx.troll_commented_submission(*p.link_id, account)) ++cocommented;
    if (on_troll_submission) {
      ++on_troll;
      if (p.is_top_level()) ++direct;
    }
    if (reply_to_troll) {
      ++reply_troll;
      if (on_troll_submission) ++reply_troll_in_troll;
    }
  }

  auto frac = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  f.account_age_years = std::max<double>(0.0, static_cast<double>(reference_utc - first) / kSecondsPerYear);
  f.frac_same_title = frac(same_title, f.total_submissions);
  f.frac_cocommented = frac(cocommented, f.total_comments);
  f.frac_on_troll_submissions = frac(on_troll, f.total_comments);
  f.frac_direct_replies_on_troll_submissions = frac(direct, f.total_comments);
  f.frac_replies_to_troll_comments = frac(reply_troll, f.total_comments);
  f.frac_replies_to_troll_comments_in_troll_submissions = frac(reply_troll_in_troll, f.total_comments);
  return f;
}

FeatureVector extract_features(std::string_view account, const CorpusStore& store, const SeedSet& seed,
                               std::int64_t reference_utc) {
  return extract_features(account, store, SeedContext(store, seed), reference_utc);
}

Eigen::MatrixXd FeatureTable::matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), kFeatureCount);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].row();
  return m;
}

std::size_t FeatureTable::missing_count() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const FeatureVector& f) { return f.no_archived_posts; }));
}

FeatureTable extract_matrix(std::span<const std::string> accounts, const CorpusStore& store, const SeedSet& seed,
                            std::int64_t reference_utc, unsigned threads) {
  FeatureTable table;
  table.accounts.assign(accounts.begin(), accounts.end());
  table.rows.resize(accounts.size());
  if (accounts.empty()) return table;
  SeedContext ctx(store, seed);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < accounts.size(); i = next++)
      table.rows[i] = extract_features(accounts[i], store, ctx, reference_utc);
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < std::max(1u, threads); ++t) pool.emplace_back(work);
  work();
  return table;
}

std::string format_feature_csv(const FeatureTable& table) {
  std::string out = "account";
  for (auto name : kFeatureNames) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out += table.accounts[i];
    FeatureRow r = table.rows[i].row();
    for (int j = 0; j < kFeatureCount; ++j) {
      out += ',';
      out += format_double(r(j));
    }
    out += '\n';
  }
  return out;
}

FeatureTable parse_feature_csv(std::string_view csv) {
  FeatureTable table;
  bool header = true;
  for (const auto& line : split(csv, '\n')) {
    if (trim(line).empty()) continue;
    auto cells = split(trim(line), ',');
    if (header) {
      if (cells.size() != kFeatureCount + 1 || cells[0] != "account")
        throw Error(ErrorCode::MalformedRecord, "feature CSV header mismatch");
      header = false;
      continue;
    }
    if (cells.size() != kFeatureCount + 1) throw Error(ErrorCode::MalformedRecord, "feature CSV row width");
    FeatureRow r;
    for (int j = 0; j < kFeatureCount; ++j) {
      const std::string& c = cells[static_cast<std::size_t>(j) + 1];
      double v = 0;
      auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc{}) throw Error(ErrorCode::MalformedRecord, "bad feature value: " + c);
      r(j) = v;
    }
    table.accounts.push_back(cells[0]);
    table.rows.push_back(FeatureVector::from_row(r));
  }
  return table;
}

}  // namespace trollscope
