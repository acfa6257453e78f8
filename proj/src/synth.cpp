#include "trollscope/synth.hpp"

#include "trollscope/error.hpp"
#include "trollscope/random.hpp"
#include "trollscope/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>

namespace trollscope {

namespace {

constexpr std::string_view kWords[] = {
    "game",     "season",   "team",     "player",   "coach",    "match",    "score",    "league",   "win",
    "loss",     "movie",    "film",     "actor",    "scene",    "series",   "episode",  "book",     "author",
    "chapter",  "story",    "music",    "album",    "song",     "band",     "concert",  "guitar",   "drum",
    "recipe",   "cooking",  "kitchen",  "bread",    "coffee",   "garden",   "plant",    "flower",   "tree",
    "weather",  "rain",     "snow",     "summer",   "winter",   "travel",   "city",     "country",  "beach",
    "mountain", "river",    "lake",     "car",      "engine",   "road",     "bike",     "train",    "flight",
    "phone",    "computer", "software", "code",     "program",  "update",   "version",  "bug",      "feature",
    "school",   "teacher",  "student",  "class",    "exam",     "project",  "work",     "office",   "job",
    "boss",     "meeting",  "email",    "house",    "room",     "door",     "window",   "floor",    "wall",
    "dog",      "cat",      "bird",     "fish",     "horse",    "pet",      "photo",    "camera",   "picture",
    "art",      "painting", "design",   "color",    "light",    "night",    "morning",  "week",     "year",
    "friend",   "family",   "brother",  "sister",   "mother",   "father",   "kid",      "baby",     "wedding",
    "party",    "birthday", "holiday",  "gift",     "question", "answer",   "idea",     "problem",  "advice",
    "help",     "thanks",   "great",    "good",     "bad",      "funny",    "weird",    "amazing",  "awesome",
    "interesting", "cool",  "nice",     "old",      "new",      "first",    "last",     "best",     "worst",
    "little",   "big",      "long",     "short",    "fast",     "slow",     "hard",     "easy",     "true",
    "real",     "free",     "full",     "empty",    "open",     "close",    "early",    "late",     "happy",
    "sad",      "think",    "know",     "want",     "need",     "look",     "find",     "give",     "tell",
    "try",      "call",     "feel",     "leave",    "keep",     "start",    "show",     "hear",     "play",
    "run",      "move",     "live",     "believe",  "bring",    "write",    "read",     "build",    "learn",
    "change",   "lead",     "understand", "watch",  "follow",   "stop",     "create",   "speak",    "allow",
    "add",      "spend",    "grow",     "remember", "love",     "consider", "appear",   "buy",      "wait",
    "serve",    "die",      "send",     "expect",   "stay",     "fall",     "cut",      "reach",    "kill",
    "remain",   "suggest",  "raise",    "pass",     "sell",     "require",  "report",   "decide",   "pull"};

constexpr std::string_view kCampaignWords[] = {"truth", "lies", "corrupt", "elite", "agenda", "wake",
                                               "fake", "rigged", "scandal", "crisis", "freedom", "establishment"};

constexpr std::string_view kSubreddits[] = {"AskReddit", "funny", "pics", "gaming", "movies", "music",
                                            "books", "food", "travel", "sports", "technology", "science"};
constexpr std::string_view kCampaignSubreddits[] = {"politics", "news", "worldnews", "The_Donald",
                                                    "Bitcoin", "conspiracy"};

constexpr std::string_view kNameA[] = {"quiet", "brave", "lucky", "silver", "rapid", "gentle", "lazy", "bold",
                                       "clever", "misty", "sunny", "happy", "dark", "wild", "calm", "fuzzy"};
constexpr std::string_view kNameB[] = {"river", "falcon", "otter", "maple", "comet", "tiger", "pixel", "harbor",
                                       "badger", "cedar", "ember", "walrus", "lantern", "meadow", "rocket", "sparrow"};

template <typename T, std::size_t N>
const T& pick(const T (&arr)[N], Rng& rng) {
  return arr[uniform_index(rng, N)];
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

std::string base36(std::uint64_t v) {
  std::string s;
  do {
    s.push_back("0123456789abcdefghijklmnopqrstuvwxyz"[v % 36]);
    v /= 36;
  } while (v);
  return {s.rbegin(), s.rend()};
}

std::int64_t uniform_time(Rng& rng, std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  return lo + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo)));
}

struct Member {
  std::string name;
  bool troll = false;
  std::int64_t created = 0;
  std::int64_t active_from = 0;
  double troll_engagement = 0;
  std::vector<std::uint32_t> posts;
};

struct Intent {
  std::int64_t time;
  std::uint32_t member;
  bool campaign;
};

class Generator {
public:
  explicit Generator(const CampaignConfig& c) : c_(c), rng_(c.rng_seed) {
    day0_ = c.start_utc;
    end_ = c.start_utc + std::int64_t{c.days} * 86400;
    campaign_ = c.start_utc + std::int64_t{c.campaign_start_day} * 86400;
  }

  SyntheticCampaign run() {
    make_members();
    make_submissions();
    make_comments();
    return finish();
  }

private:
  std::string words(std::size_t n, double p_keyword, bool campaign) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      std::string_view w;
      if (bernoulli(rng_, p_keyword)) w = pick(c_.keywords, rng_);
      else if (campaign && bernoulli(rng_, 0.15)) w = pick(kCampaignWords, rng_);
      else w = pick(kWords, rng_);
      if (!out.empty()) out += ' ';
      out += w;
    }
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
  }

  std::string fresh_title(bool campaign) {
    std::string t = words(6 + uniform_index(rng_, 5), campaign ? c_.p_troll_keyword : c_.p_benign_keyword, campaign);
    if (campaign && !c_.keywords.empty()) t += " " + pick(c_.keywords, rng_);
    return t;
  }

  std::string next_id() { return base36(next_id_++); }

  void make_members() {
    std::set<std::string> used;
    const std::size_t total = c_.n_trolls + c_.n_benign;
    while (used.size() < total) {
      std::string name = std::string(pick(kNameA, rng_)) + "_" + std::string(pick(kNameB, rng_)) +
                         std::to_string(uniform_index(rng_, 10000));
      used.insert(name);
    }
    std::vector<std::string> names(used.begin(), used.end());
    shuffle_in_place(names, rng_);
    for (std::size_t i = 0; i < total; ++i) {
      Member m;
      m.name = names[i];
      m.troll = i < c_.n_trolls;
      if (m.troll) {
        int wave = c_.creation_wave_days.empty() ? 0 : pick(c_.creation_wave_days, rng_);
        m.created = uniform_time(rng_, day0_ + std::int64_t{wave} * 86400, day0_ + std::int64_t{wave + 1} * 86400);
      } else {
        std::int64_t lo = day0_ - 1500LL * 86400, hi = end_ - 30LL * 86400;
        m.created = uniform_time(rng_, lo, hi);
        m.troll_engagement = uniform_real(rng_, 0.0, c_.benign_max_troll_engagement);
      }
      m.active_from = std::max(m.created + 3600, day0_);
      members_.push_back(std::move(m));
    }
  }

  std::uint32_t add_post(Post p, std::uint32_t member) {
    auto idx = static_cast<std::uint32_t>(posts_.size());
    posts_.push_back(std::move(p));
    owner_.push_back(member);
    return idx;
  }

  std::int64_t score(bool troll) { return 1 + static_cast<std::int64_t>(geometric(rng_, (troll ? c_.troll_mean_score : c_.benign_mean_score) - 1)); }

  void make_submissions() {
    struct Planned {
      std::int64_t time;
      std::uint32_t member;
      bool campaign;
    };
    std::vector<Planned> planned;
    for (std::uint32_t i = 0; i < members_.size(); ++i) {
      const Member& m = members_[i];
      if (m.troll) {
        for (auto n = geometric(rng_, c_.troll_normal_submissions); n-- > 0;)
          planned.push_back({uniform_time(rng_, m.active_from, std::max(m.active_from + 1, campaign_)), i, false});
        for (auto n = 1 + geometric(rng_, std::max(0.0, c_.troll_campaign_submissions - 1)); n-- > 0;)
          planned.push_back({uniform_time(rng_, std::max(campaign_, m.active_from), end_), i, true});
      } else {
        for (auto n = geometric(rng_, c_.benign_submissions); n-- > 0;)
          planned.push_back({uniform_time(rng_, m.active_from, end_), i, false});
      }
    }
    std::sort(planned.begin(), planned.end(), [](const Planned& a, const Planned& b) {
      return a.time != b.time ? a.time < b.time : a.member < b.member;
    });

    std::vector<std::pair<std::string, std::uint32_t>> campaign_titles;  // title, member
    for (const auto& p : planned) {
      const Member& m = members_[p.member];
      Post s;
      s.id = next_id();
      s.kind = PostKind::Submission;
      s.author = m.name;
      s.created_utc = p.time;
      s.score = score(m.troll);
      std::string title;
      if (p.campaign) {
        s.subreddit = std::string(pick(kCampaignSubreddits, rng_));
        if (bernoulli(rng_, c_.p_same_title_repost)) {
          std::vector<const std::string*> others;
          for (const auto& [t, who] : campaign_titles)
            if (who != p.member) others.push_back(&t);
          if (!others.empty()) title = *pick(others, rng_);
        }
        if (title.empty()) title = fresh_title(true);
        campaign_titles.emplace_back(title, p.member);
        s.body = words(8 + uniform_index(rng_, 18), c_.p_troll_keyword, true);
      } else {
        s.subreddit = std::string(pick(kSubreddits, rng_));
        if (!m.troll && !campaign_titles.empty() && bernoulli(rng_, c_.p_benign_title_copy))
          title = pick(campaign_titles, rng_).first;
        else
          title = fresh_title(false);
        if (bernoulli(rng_, 0.5)) s.body = words(8 + uniform_index(rng_, 18), c_.p_benign_keyword, false);
      }
      s.title = std::move(title);
      auto idx = add_post(std::move(s), p.member);
      submissions_.push_back({p.time, idx});
      if (p.campaign) troll_submissions_.push_back({p.time, idx});
    }
  }

  // Entries of a time-sorted list inside [lo, hi).
  static std::pair<std::size_t, std::size_t> window(const std::vector<std::pair<std::int64_t, std::uint32_t>>& list,
                                                    std::int64_t lo, std::int64_t hi) {
    auto cmp = [](const std::pair<std::int64_t, std::uint32_t>& e, std::int64_t t) { return e.first < t; };
    auto a = std::lower_bound(list.begin(), list.end(), lo, cmp);
    auto b = std::lower_bound(list.begin(), list.end(), hi, cmp);
    return {static_cast<std::size_t>(a - list.begin()), static_cast<std::size_t>(b - list.begin())};
  }

  void make_comments() {
    std::vector<Intent> intents;
    for (std::uint32_t i = 0; i < members_.size(); ++i) {
      const Member& m = members_[i];
      if (m.troll) {
        for (auto n = geometric(rng_, c_.troll_normal_comments); n-- > 0;)
          intents.push_back({uniform_time(rng_, m.active_from, std::max(m.active_from + 1, campaign_)), i, false});
        for (auto n = c_.troll_min_campaign_comments + geometric(rng_, c_.troll_campaign_comments); n-- > 0;)
          intents.push_back({uniform_time(rng_, std::max(campaign_, m.active_from), end_), i, true});
      } else {
        for (auto n = geometric(rng_, c_.benign_comments); n-- > 0;)
          intents.push_back({uniform_time(rng_, m.active_from, end_), i, false});
      }
    }
    std::sort(intents.begin(), intents.end(), [](const Intent& a, const Intent& b) {
      return a.time != b.time ? a.time < b.time : a.member < b.member;
    });

    struct ThreadState {
      std::vector<std::uint32_t> comments;
      std::vector<std::uint32_t> troll_comments;
    };
    std::unordered_map<std::uint32_t, ThreadState> threads;
    const std::int64_t span = std::int64_t{c_.comment_window_days} * 86400;

    for (const auto& in : intents) {
      const Member& m = members_[in.member];
      // Choose the submission.
      std::uint32_t target = 0;
      bool found = false;
      double seek = m.troll ? (in.campaign ? c_.p_troll_comments_on_troll_submission : 0.0) : m.troll_engagement;
      if (seek > 0 && bernoulli(rng_, seek)) {
        auto [a, b] = window(troll_submissions_, in.time - span, in.time);
        std::vector<std::uint32_t> options;
        for (std::size_t k = a; k < b; ++k)
          if (owner_[troll_submissions_[k].second] != in.member) options.push_back(troll_submissions_[k].second);
        if (!options.empty()) {
          target = pick(options, rng_);
          found = true;
        }
      }
      if (!found) {
        auto [a, b] = window(submissions_, in.time - span, in.time);
        if (a == b) continue;
        target = submissions_[a + uniform_index(rng_, b - a)].second;
      }

      // Choose the parent within the thread.
      ThreadState& th = threads[target];
      std::uint32_t parent = target;
      if (m.troll && in.campaign && bernoulli(rng_, c_.p_reply_to_troll_comment)) {
        std::vector<std::uint32_t> options;
        for (auto cidx : th.troll_comments)
          if (owner_[cidx] != in.member && posts_[cidx].created_utc < in.time) options.push_back(cidx);
        if (!options.empty()) parent = pick(options, rng_);
      }
      if (parent == target && !th.comments.empty() && bernoulli(rng_, 0.4)) {
        std::uint32_t cand = pick(th.comments, rng_);
        if (posts_[cand].created_utc < in.time) parent = cand;
      }

      const Post& sub = posts_[target];
      Post c;
      c.id = next_id();
      c.kind = PostKind::Comment;
      c.author = m.name;
      c.subreddit = sub.subreddit;
      c.created_utc = in.time;
      c.link_id = sub.id;
      c.parent_id = posts_[parent].id;
      c.score = score(m.troll);
      c.body = words(5 + uniform_index(rng_, 16), m.troll && in.campaign ? c_.p_troll_keyword : c_.p_benign_keyword,
                     m.troll && in.campaign);
      bool anonymous = !m.troll && bernoulli(rng_, c_.p_deleted_author);
      if (anonymous) c.author = std::string(kDeletedAuthor);
      auto idx = add_post(std::move(c), anonymous ? kNoOwner : in.member);
      th.comments.push_back(idx);
      if (m.troll && !anonymous) th.troll_comments.push_back(idx);
    }
  }

  SyntheticCampaign finish() {
    SyntheticCampaign out;
    for (std::uint32_t i = 0; i < posts_.size(); ++i)
      if (owner_[i] != kNoOwner) members_[owner_[i]].posts.push_back(i);

    for (const auto& m : members_) {
      out.labels[m.name] = m.troll ? Label::Troll : Label::Benign;
      out.creation_utc[m.name] = m.created;
      MockPlatformClient::Entry e;
      double p_susp = m.troll ? c_.p_troll_suspended : c_.p_benign_suspended;
      double p_del = m.troll ? c_.p_troll_account_deleted : c_.p_benign_account_deleted;
      double u = uniform_unit(rng_);
      e.status = u < p_susp ? 403 : u < p_susp + p_del ? 404 : 200;
      if (e.status == 200) {
        e.created_utc = m.created;
        double p_post = m.troll ? c_.p_troll_post_deleted : c_.p_benign_post_deleted;
        for (auto idx : m.posts)
          if (!bernoulli(rng_, p_post)) e.posts.push_back({posts_[idx].id, posts_[idx].created_utc});
        std::sort(e.posts.begin(), e.posts.end(), [](const LivePost& a, const LivePost& b) {
          return a.created_utc != b.created_utc ? a.created_utc > b.created_utc : a.id < b.id;
        });
      }
      out.live.emplace(m.name, std::move(e));
    }

    std::vector<std::string> trolls;
    for (const auto& m : members_)
      if (m.troll) trolls.push_back(m.name);
    std::sort(trolls.begin(), trolls.end());
    auto seed = sample_without_replacement(std::move(trolls), c_.seed_size, rng_);
    out.seed.names.insert(seed.begin(), seed.end());
    out.seed.label = "synthetic-" + std::to_string(c_.rng_seed);

    out.posts = std::move(posts_);
    std::sort(out.posts.begin(), out.posts.end(), ChronologicalOrder{});
    return out;
  }

  static constexpr std::uint32_t kNoOwner = 0xffffffffu;

  const CampaignConfig& c_;
  Rng rng_;
  std::int64_t day0_ = 0, end_ = 0, campaign_ = 0;
  std::uint64_t next_id_ = 36 * 36 * 36 * 36;
  std::vector<Member> members_;
  std::vector<Post> posts_;
  std::vector<std::uint32_t> owner_;
  std::vector<std::pair<std::int64_t, std::uint32_t>> submissions_;
  std::vector<std::pair<std::int64_t, std::uint32_t>> troll_submissions_;
};

}  // namespace

void CampaignConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0 && p <= 1)) throw Error(ErrorCode::InvalidConfig, std::string(name) + " must lie in [0,1]");
  };
  prob(p_troll_comments_on_troll_submission, "p_troll_comments_on_troll_submission");
  prob(p_reply_to_troll_comment, "p_reply_to_troll_comment");
  prob(p_same_title_repost, "p_same_title_repost");
  prob(p_troll_keyword, "p_troll_keyword");
  prob(benign_max_troll_engagement, "benign_max_troll_engagement");
  prob(p_benign_title_copy, "p_benign_title_copy");
  prob(p_benign_keyword, "p_benign_keyword");
  prob(p_deleted_author, "p_deleted_author");
  prob(p_troll_post_deleted, "p_troll_post_deleted");
  prob(p_benign_post_deleted, "p_benign_post_deleted");
  prob(p_troll_suspended + p_troll_account_deleted, "troll suspension + deletion");
  prob(p_benign_suspended + p_benign_account_deleted, "benign suspension + deletion");
  if (n_benign == 0) throw Error(ErrorCode::InvalidConfig, "n_benign must be positive");
  if (seed_size > n_trolls) throw Error(ErrorCode::InvalidConfig, "seed_size exceeds n_trolls");
  if (days <= 0 || campaign_start_day < 0 || campaign_start_day >= days)
    throw Error(ErrorCode::InvalidConfig, "campaign_start_day must fall inside the simulated days");
  if (comment_window_days <= 0) throw Error(ErrorCode::InvalidConfig, "comment_window_days must be positive");
  for (int d : creation_wave_days)
    if (d >= campaign_start_day) throw Error(ErrorCode::InvalidConfig, "creation waves must precede the campaign");
  if (keywords.empty()) throw Error(ErrorCode::InvalidConfig, "keyword pool is empty");
  for (double v : {troll_normal_comments, troll_campaign_comments, troll_campaign_submissions, troll_normal_submissions,
                   benign_comments, benign_submissions})
    if (!(v >= 0)) throw Error(ErrorCode::InvalidConfig, "activity means must be non-negative");
  if (!(troll_mean_score >= 1) || !(benign_mean_score >= 1))
    throw Error(ErrorCode::InvalidConfig, "mean scores must be at least 1");
}

std::vector<std::string> SyntheticCampaign::accounts_with(Label label) const {
  std::vector<std::string> out;
  for (const auto& [name, l] : labels)
    if (l == label) out.push_back(name);
  return out;
}

SyntheticCampaign generate_campaign(const CampaignConfig& config) {
  config.validate();
  return Generator(config).run();
}

std::string format_labels_csv(const std::map<std::string, Label>& labels) {
  std::string out = "account,label\n";
  for (const auto& [name, l] : labels) out += name + "," + std::string(to_string(l)) + "\n";
  return out;
}

std::map<std::string, Label> parse_labels_csv(std::string_view csv) {
  std::map<std::string, Label> out;
  bool header = true;
  for (const auto& raw : split(csv, '\n')) {
    auto line = trim(raw);
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto cells = split(line, ',');
    if (cells.size() != 2 || (cells[1] != "troll" && cells[1] != "benign"))
      throw Error(ErrorCode::MalformedRecord, "bad label row: " + std::string(line));
    out[cells[0]] = cells[1] == "troll" ? Label::Troll : Label::Benign;
  }
  return out;
}

void write_campaign(const SyntheticCampaign& campaign, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string corpus;
  for (const auto& p : campaign.posts) {
    corpus += to_record_line(p);
    corpus += '\n';
  }
  write_file_atomic(dir / "corpus.ndjson", corpus);
  write_file_atomic(dir / "labels.csv", format_labels_csv(campaign.labels));
  write_file_atomic(dir / "live_fixture.json", format_live_fixture(campaign.live));
  write_file_atomic(dir / "seed.txt", format_seed_file(campaign.seed));
}

CorpusStore load_campaign_store(const SyntheticCampaign& campaign) {
  CorpusStore store;
  for (const auto& p : campaign.posts) store.insert(p);
  return store;
}

}  // namespace trollscope
