#pragma once

// Candidate selection: accounts that reposted a seed troll's title or
// commented on a seed troll's submission. Membership only, no scoring.

#include "trollscope/corpus.hpp"

#include <set>
#include <string>

namespace trollscope {

struct PrefilterConfig {
  std::size_t min_title_len = 15;  // code points, after normalization
};

struct CandidateSet {
  std::set<std::string> same_title;
  std::set<std::string> commenters;
  std::set<std::string> all;  // same_title ∪ commenters
  std::size_t intersection_count = 0;
};

std::set<std::string> find_same_title_accounts(const CorpusStore& store, const SeedSet& seed,
                                               const PrefilterConfig& config = {});
std::set<std::string> find_commenter_accounts(const CorpusStore& store, const SeedSet& seed);
CandidateSet prefilter(const CorpusStore& store, const SeedSet& seed, const PrefilterConfig& config = {});

/// Newline-delimited account names behind a commented header recording the
/// seed label and parameters.
std::string format_candidate_file(const CandidateSet& candidates, const SeedSet& seed,
                                  const PrefilterConfig& config);
/// Reads any account-per-line file ('#' lines ignored), e.g. a candidate file.
std::vector<std::string> load_account_list(const std::filesystem::path& path);

}  // namespace trollscope
