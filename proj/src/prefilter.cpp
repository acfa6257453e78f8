#include "trollscope/prefilter.hpp"

#include "trollscope/text.hpp"

#include <algorithm>
#include <iterator>

namespace trollscope {

namespace {

bool eligible(std::string_view author, const SeedSet& seed) {
  return author != kDeletedAuthor && !seed.contains(author);
}

}  // namespace

std::set<std::string> find_same_title_accounts(const CorpusStore& store, const SeedSet& seed,
                                               const PrefilterConfig& config) {
  std::set<std::string> titles;
  for (const auto& troll : seed.names) {
    for (auto i : store.by_author(troll)) {
      const Post& p = store.at(i);
      if (p.is_comment()) continue;
      std::string t = normalize_title(*p.title);
      if (utf8_length(t) >= config.min_title_len) titles.insert(std::move(t));
    }
  }
  std::set<std::string> out;
  for (const auto& t : titles)
    for (auto i : store.by_title(t))
      if (eligible(store.at(i).author, seed)) out.insert(store.at(i).author);
  return out;
}

std::set<std::string> find_commenter_accounts(const CorpusStore& store, const SeedSet& seed) {
  std::set<std::string> out;
  for (const auto& troll : seed.names) {
    for (auto i : store.by_author(troll)) {
      const Post& s = store.at(i);
      if (s.is_comment()) continue;
      for (auto c : store.by_link(s.id))
        if (eligible(store.at(c).author, seed)) out.insert(store.at(c).author);
    }
  }
  return out;
}

CandidateSet prefilter(const CorpusStore& store, const SeedSet& seed, const PrefilterConfig& config) {
  CandidateSet c;
  c.same_title = find_same_title_accounts(store, seed, config);
  c.commenters = find_commenter_accounts(store, seed);
  std::set_union(c.same_title.begin(), c.same_title.end(), c.commenters.begin(), c.commenters.end(),
                 std::inserter(c.all, c.all.end()));
  c.intersection_count = c.same_title.size() + c.commenters.size() - c.all.size();
  return c;
}

std::string format_candidate_file(const CandidateSet& candidates, const SeedSet& seed,
                                  const PrefilterConfig& config) {
  std::string out;
  out += "# seed_label=" + seed.label + "\n";
  out += "# seed_size=" + std::to_string(seed.names.size()) + "\n";
  out += "# min_title_len=" + std::to_string(config.min_title_len) + "\n";
  out += "# same_title=" + std::to_string(candidates.same_title.size()) +
         " commenters=" + std::to_string(candidates.commenters.size()) +
         " intersection=" + std::to_string(candidates.intersection_count) + "\n";
  for (const auto& name : candidates.all) out += name + "\n";
  return out;
}

std::vector<std::string> load_account_list(const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (const auto& raw : split(read_file(path), '\n')) {
    std::string_view line = trim(raw);
    if (!line.empty() && line.front() != '#') out.emplace_back(line);
  }
  return out;
}

}  // namespace trollscope
