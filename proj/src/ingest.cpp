#include "difflab/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <cstdio>

#include "json.hpp"

namespace difflab {

// ---------------------------------------------------------------------------
// Interner

std::uint32_t Interner::intern(std::string_view s) {
  auto it = ids_.find(s);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(s);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Interner::find(std::string_view s) const {
  auto it = ids_.find(s);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// TweetLog

TweetLog::TweetLog() { memes_flat_.reserve(16); }

TweetView TweetLog::operator[](std::size_t i) const {
  const Row& r = rows_[i];
  const std::uint32_t meme_end =
      i + 1 < rows_.size() ? rows_[i + 1].meme_begin : static_cast<std::uint32_t>(memes_flat_.size());
  const std::uint32_t noun_end =
      i + 1 < rows_.size() ? rows_[i + 1].noun_begin : static_cast<std::uint32_t>(nouns_flat_.size());
  std::span<const MemeId> memes(memes_flat_);
  std::span<const TokenId> nouns(nouns_flat_);
  return TweetView{r.ts,
                   r.user,
                   memes.subspan(r.meme_begin, r.url_begin - r.meme_begin),
                   memes.subspan(r.url_begin, meme_end - r.url_begin),
                   nouns.subspan(r.noun_begin, noun_end - r.noun_begin),
                   r.lang};
}

std::uint16_t TweetLog::intern_lang(std::string_view lang) {
  return static_cast<std::uint16_t>(langs_.intern(lang));
}

MemeId TweetLog::intern_meme(std::string_view s, MemeKind kind) {
  const MemeId id = memes_.intern(s);
  if (id == meme_kinds_.size()) meme_kinds_.push_back(kind);
  return id;
}

void TweetLog::append(const TweetRecord& rec) {
  Row row{rec.timestamp,
          rec.user,
          static_cast<std::uint32_t>(memes_flat_.size()),
          0,
          static_cast<std::uint32_t>(nouns_flat_.size()),
          intern_lang(rec.lang)};
  memes_flat_.insert(memes_flat_.end(), rec.hashtags.begin(), rec.hashtags.end());
  row.url_begin = static_cast<std::uint32_t>(memes_flat_.size());
  memes_flat_.insert(memes_flat_.end(), rec.urls.begin(), rec.urls.end());
  nouns_flat_.insert(nouns_flat_.end(), rec.nouns.begin(), rec.nouns.end());
  rows_.push_back(row);
}

void TweetLog::append_raw(Timestamp ts, UserId user, std::span<const std::string_view> hashtags,
                          std::span<const std::string_view> urls,
                          std::span<const std::string_view> nouns, std::string_view lang) {
  Row row{ts, user, static_cast<std::uint32_t>(memes_flat_.size()), 0,
          static_cast<std::uint32_t>(nouns_flat_.size()), intern_lang(lang)};
  for (auto h : hashtags) memes_flat_.push_back(intern_meme(h, MemeKind::kHashtag));
  row.url_begin = static_cast<std::uint32_t>(memes_flat_.size());
  for (auto u : urls) memes_flat_.push_back(intern_meme(u, MemeKind::kUrl));
  for (auto n : nouns) nouns_flat_.push_back(tokens_.intern(n));
  rows_.push_back(row);
}

TweetRecord TweetLog::record(std::size_t i) const {
  const TweetView v = (*this)[i];
  TweetRecord rec;
  rec.timestamp = v.timestamp;
  rec.user = v.user;
  rec.hashtags.assign(v.hashtags.begin(), v.hashtags.end());
  rec.urls.assign(v.urls.begin(), v.urls.end());
  rec.nouns.assign(v.nouns.begin(), v.nouns.end());
  rec.lang = langs_.name(v.lang);
  return rec;
}

std::optional<std::uint16_t> TweetLog::english() const {
  auto id = langs_.find("en");
  if (!id) return std::nullopt;
  return static_cast<std::uint16_t>(*id);
}

Timestamp TweetLog::first_time() const { return rows_.empty() ? 0 : rows_.front().ts; }
Timestamp TweetLog::last_time() const { return rows_.empty() ? 0 : rows_.back().ts; }

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Comma-joined list; empty items are dropped, duplicates kept in order of
// first appearance only.
std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  for (auto item : split(s, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (std::find(out.begin(), out.end(), item) == out.end()) out.push_back(item);
  }
  return out;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  s = trim(s);
  Timestamp t = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
  if (ec != std::errc() || p != s.data() + s.size() || t < 0) return std::nullopt;
  return t;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

}  // namespace

std::optional<UserId> parse_user_id(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == 'u') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  UserId id = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec != std::errc() || p != text.data() + text.size()) return std::nullopt;
  return id;
}

namespace {

// Fields of one line before interning. Views point either into the source
// line or into `owned`; the struct is filled in place and never moved.
struct RawLine {
  Timestamp ts = 0;
  UserId user = 0;
  std::string_view hashtags, urls, nouns, lang;
  std::string owned[4];
};

bool read_tsv(std::string_view line, RawLine& raw) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto fields = split(line, '\t');
  if (fields.size() != 6) return false;
  const auto ts = parse_timestamp(fields[0]);
  const auto user = parse_user_id(fields[1]);
  if (!ts || !user) return false;
  raw.ts = *ts;
  raw.user = *user;
  raw.hashtags = fields[2];
  raw.urls = fields[3];
  raw.nouns = fields[4];
  raw.lang = trim(fields[5]);
  return true;
}

bool read_json(std::string_view line, RawLine& raw) {
  auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return false;

  std::optional<Timestamp> ts;
  if (auto it = j.find("timestamp"); it != j.end()) {
    if (it->is_number_integer() && it->get<std::int64_t>() >= 0) ts = it->get<std::int64_t>();
    else if (it->is_string()) ts = parse_timestamp(it->get_ref<const std::string&>());
  }
  std::optional<UserId> user;
  if (auto it = j.find("user_id"); it != j.end()) {
    if (it->is_number_unsigned()) user = it->get<UserId>();
    else if (it->is_string()) user = parse_user_id(it->get_ref<const std::string&>());
  }
  if (!ts || !user) return false;
  raw.ts = *ts;
  raw.user = *user;

  auto list_field = [&](const char* key, std::string& out) -> bool {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return true;
    if (it->is_string()) {
      out = it->get<std::string>();
      return true;
    }
    if (!it->is_array()) return false;
    for (const auto& item : *it) {
      if (!item.is_string()) return false;
      if (!out.empty()) out += ',';
      out += item.get_ref<const std::string&>();
    }
    return true;
  };
  if (!list_field("hashtags", raw.owned[0]) || !list_field("urls", raw.owned[1]) ||
      !list_field("nouns", raw.owned[2])) {
    return false;
  }
  if (auto it = j.find("lang"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) return false;
    raw.owned[3] = it->get<std::string>();
  }
  raw.hashtags = raw.owned[0];
  raw.urls = raw.owned[1];
  raw.nouns = raw.owned[2];
  raw.lang = raw.owned[3];
  return true;
}

void append(const RawLine& raw, TweetLog& log) {
  const auto hashtags = split_list(raw.hashtags);
  const auto urls = split_list(raw.urls);
  const auto nouns = split_list(raw.nouns);
  log.append_raw(raw.ts, raw.user, hashtags, urls, nouns, raw.lang);
}

bool read_line(std::string_view line, LogSchema schema, RawLine& raw) {
  if (schema == LogSchema::kAuto) {
    const auto first = line.find_first_not_of(" \t");
    schema = first != std::string_view::npos && line[first] == '{' ? LogSchema::kJsonLines : LogSchema::kTsv;
  }
  return schema == LogSchema::kJsonLines ? read_json(line, raw) : read_tsv(line, raw);
}

}  // namespace

bool parse_tsv_line(std::string_view line, TweetLog& log, bool* blank) {
  if (blank) *blank = is_blank(line);
  RawLine raw;
  if (is_blank(line) || !read_tsv(line, raw)) return false;
  append(raw, log);
  return true;
}

bool parse_json_line(std::string_view line, TweetLog& log, bool* blank) {
  if (blank) *blank = is_blank(line);
  RawLine raw;
  if (is_blank(line) || !read_json(line, raw)) return false;
  append(raw, log);
  return true;
}

void parse_stream(std::istream& in, LogSchema schema, const ParseOptions& opts, TweetLog& log,
                  ParseStats& stats) {
  std::string line;
  Timestamp last = std::numeric_limits<Timestamp>::min();
  auto reject = [&](const char* what) {
    if (opts.strict) {
      throw DataError(std::string(what) + " at line " + std::to_string(stats.lines));
    }
    ++stats.skipped;
    if (stats.first_bad_line == 0) stats.first_bad_line = stats.lines;
  };
  while (std::getline(in, line)) {
    ++stats.lines;
    if (is_blank(line)) continue;
    RawLine raw;
    if (!read_line(line, schema, raw)) {
      reject("malformed record");
      continue;
    }
    if (raw.ts < last) {
      reject("out-of-order timestamp");
      continue;
    }
    last = raw.ts;
    append(raw, log);
    ++stats.records;
  }
}

TweetLog parse_log(const std::string& path, const ParseOptions& opts, ParseStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read log file: " + path);
  LogSchema schema = opts.schema;
  if (schema == LogSchema::kAuto) {
    const bool json = path.ends_with(".jsonl") || path.ends_with(".json") || path.ends_with(".ndjson");
    if (json) schema = LogSchema::kJsonLines;
  }
  TweetLog log;
  ParseStats local;
  parse_stream(in, schema, opts, log, local);
  if (stats) *stats = local;
  return log;
}

std::string format_tsv(const TweetLog& log, std::size_t i) {
  const TweetView v = log[i];
  std::string out = std::to_string(v.timestamp);
  out += "\tu";
  out += std::to_string(v.user);
  auto join = [&](auto ids, const Interner& table) {
    out += '\t';
    bool first = true;
    for (auto id : ids) {
      if (!first) out += ',';
      first = false;
      out += table.name(id);
    }
  };
  join(v.hashtags, log.memes());
  join(v.urls, log.memes());
  join(v.nouns, log.tokens());
  out += '\t';
  out += log.langs().name(v.lang);
  return out;
}

}  // namespace difflab

namespace difflab {

// ---------------------------------------------------------------------------
// Catalog

void CatalogWindow::validate() const {
  if (emergence_start > emergence_end) {
    throw ConfigError("empty emergence window: start " + std::to_string(emergence_start) +
                      " > end " + std::to_string(emergence_end));
  }
  if (analysis_end < emergence_end) {
    throw ConfigError("analysis end " + std::to_string(analysis_end) +
                      " precedes emergence end " + std::to_string(emergence_end));
  }
}

CatalogWindow default_window(const TweetLog& log) {
  const Timestamp t0 = log.first_time();
  const Timestamp t1 = log.last_time();
  return CatalogWindow{t0, t0 + (t1 - t0) / 3, t1};
}

std::size_t MemeCatalog::accepted_count() const {
  return static_cast<std::size_t>(
      std::count_if(memes_.begin(), memes_.end(), [](const MemeInfo& m) { return m.accepted; }));
}

std::vector<MemeId> MemeCatalog::accepted_memes() const {
  std::vector<MemeId> out;
  for (MemeId m = 0; m < memes_.size(); ++m) {
    if (memes_[m].accepted) out.push_back(m);
  }
  return out;
}

void MemeCatalog::write_csv(std::ostream& out, const Interner& memes) const {
  out << "meme_id,kind,birth_time,english_share,adopters,accepted\n";
  for (MemeId m = 0; m < memes_.size(); ++m) {
    const MemeInfo& info = memes_[m];
    if (!info.seen) continue;
    char share[32];
    std::snprintf(share, sizeof share, "%.6f", info.english_share);
    out << memes.name(m) << ',' << to_string(info.kind) << ',' << info.birth_time << ',' << share
        << ',' << info.adopters << ',' << (info.accepted ? 1 : 0) << '\n';
  }
}

MemeCatalog build_catalog(const TweetLog& log, const CatalogOptions& opts) {
  opts.window.validate();
  if (opts.english_threshold < 0.0 || opts.english_threshold > 1.0) {
    throw ConfigError("english threshold must lie in [0,1]");
  }
  const std::size_t n_memes = log.memes().size();
  std::vector<MemeInfo> info(n_memes);
  std::vector<std::uint64_t> tweets(n_memes, 0), english(n_memes, 0);
  std::vector<std::pair<MemeId, UserId>> adoptions;
  const auto en = log.english();
  const Timestamp analysis_end = opts.window.analysis_end;

  for (std::size_t i = 0; i < log.size(); ++i) {
    const TweetView v = log[i];
    const bool is_en = en && v.lang == *en;
    auto visit = [&](MemeId m) {
      MemeInfo& mi = info[m];
      if (!mi.seen) {
        mi.seen = true;
        mi.kind = log.meme_kind(m);
        mi.birth_time = v.timestamp;
        mi.birth_record = i;
        mi.first_poster = v.user;
      }
      const bool in_analysis = v.timestamp <= analysis_end;
      if (opts.english_share_full_log || in_analysis) {
        ++tweets[m];
        if (is_en) ++english[m];
      }
      if (in_analysis) adoptions.emplace_back(m, v.user);
    };
    // A meme listed twice in one tweet is visited once by construction of the
    // parser's list dedup; hashtag/url columns never share an id.
    for (MemeId m : v.hashtags) visit(m);
    for (MemeId m : v.urls) visit(m);
  }

  std::sort(adoptions.begin(), adoptions.end());
  adoptions.erase(std::unique(adoptions.begin(), adoptions.end()), adoptions.end());
  for (const auto& [m, u] : adoptions) ++info[m].adopters;

  const TimeRange emergence = opts.window.emergence();
  for (MemeId m = 0; m < n_memes; ++m) {
    MemeInfo& mi = info[m];
    if (!mi.seen) continue;
    mi.english_share = tweets[m] ? static_cast<double>(english[m]) / static_cast<double>(tweets[m]) : 0.0;
    mi.accepted = emergence.contains(mi.birth_time) && mi.english_share >= opts.english_threshold &&
                  mi.adopters >= opts.min_adopters;
  }
  return MemeCatalog(std::move(info));
}

// ---------------------------------------------------------------------------
// Noun bags

NounBags build_noun_bags(const TweetLog& log, TimeRange prior_window) {
  NounBags bags;
  const auto en = log.english();
  if (!en) return bags;
  std::unordered_map<UserId, std::vector<TokenId>> users;
  std::unordered_map<MemeId, std::vector<TokenId>> memes;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const TweetView v = log[i];
    if (v.lang != *en || !prior_window.contains(v.timestamp) || v.nouns.empty()) continue;
    auto& ub = users[v.user];
    ub.insert(ub.end(), v.nouns.begin(), v.nouns.end());
    for (auto span : {v.hashtags, v.urls}) {
      for (MemeId m : span) {
        auto& mb = memes[m];
        mb.insert(mb.end(), v.nouns.begin(), v.nouns.end());
      }
    }
  }
  auto finish = [](auto& map, std::vector<NounBag>& out) {
    out.reserve(map.size());
    for (auto& [owner, tokens] : map) {
      std::sort(tokens.begin(), tokens.end());
      tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
      out.push_back(NounBag{static_cast<std::uint64_t>(owner), std::move(tokens)});
    }
    std::sort(out.begin(), out.end(), [](const NounBag& a, const NounBag& b) { return a.owner < b.owner; });
  };
  finish(users, bags.users);
  finish(memes, bags.memes);
  return bags;
}

}  // namespace difflab
