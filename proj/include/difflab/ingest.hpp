#pragma once

// Tweet-log parsing, meme catalog filters and noun bags for topic modeling.
//
// Log format (one tweet per line, tab separated, empty fields allowed):
//
//   timestamp \t user_id \t hashtags \t urls \t nouns \t lang
//
// where list fields are comma joined. User ids are unsigned integers with an
// optional "u" prefix. The JSON-lines form uses the same field names
// ("timestamp", "user_id", "hashtags", "urls", "nouns", "lang"); list fields
// may be JSON arrays or comma-joined strings.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "difflab/common.hpp"

namespace difflab {

// Bijective string <-> dense id table. Ids are assigned in first-seen order.
class Interner {
 public:
  std::uint32_t intern(std::string_view s);
  std::optional<std::uint32_t> find(std::string_view s) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> ids_;
};

// One parsed tweet. Owning form, used by the line parser and by tests.
struct TweetRecord {
  Timestamp timestamp = 0;
  UserId user = 0;
  std::vector<MemeId> hashtags;
  std::vector<MemeId> urls;
  std::vector<TokenId> nouns;
  std::string lang;

  bool operator==(const TweetRecord&) const = default;
};

// Borrowed view of one row of a TweetLog.
struct TweetView {
  Timestamp timestamp;
  UserId user;
  std::span<const MemeId> hashtags;
  std::span<const MemeId> urls;
  std::span<const TokenId> nouns;
  std::uint16_t lang;
};

// Columnar, append-only store of time-ordered tweets plus the intern tables
// that give meaning to its ids.
class TweetLog {
 public:
  TweetLog();

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  TweetView operator[](std::size_t i) const;

  // Appends a record whose ids are already interned in this log's tables.
  void append(const TweetRecord& rec);

  // Interns raw strings and appends.
  void append_raw(Timestamp ts, UserId user, std::span<const std::string_view> hashtags,
                  std::span<const std::string_view> urls,
                  std::span<const std::string_view> nouns, std::string_view lang);

  TweetRecord record(std::size_t i) const;

  Interner& memes() { return memes_; }
  const Interner& memes() const { return memes_; }
  Interner& tokens() { return tokens_; }
  const Interner& tokens() const { return tokens_; }
  const Interner& langs() const { return langs_; }
  std::uint16_t intern_lang(std::string_view lang);

  // Kind is fixed by the column a meme string was first seen in.
  MemeKind meme_kind(MemeId m) const { return meme_kinds_.at(m); }
  std::span<const MemeKind> meme_kinds() const { return meme_kinds_; }
  MemeId intern_meme(std::string_view s, MemeKind kind);

  // Language id of "en", or nullopt if no English tweet was seen.
  std::optional<std::uint16_t> english() const;

  Timestamp first_time() const;
  Timestamp last_time() const;

 private:
  struct Row {
    Timestamp ts;
    UserId user;
    std::uint32_t meme_begin;  // hashtags: [meme_begin, url_begin)
    std::uint32_t url_begin;   // urls: [url_begin, next row's meme_begin)
    std::uint32_t noun_begin;
    std::uint16_t lang;
  };

  std::vector<Row> rows_;
  std::vector<MemeId> memes_flat_;
  std::vector<TokenId> nouns_flat_;
  Interner memes_;
  Interner tokens_;
  Interner langs_;
  std::vector<MemeKind> meme_kinds_;
};

enum class LogSchema { kAuto, kTsv, kJsonLines };

struct ParseOptions {
  LogSchema schema = LogSchema::kAuto;
  // Strict mode turns the first malformed or out-of-order line into a DataError.
  bool strict = false;
};

struct ParseStats {
  std::size_t lines = 0;
  std::size_t records = 0;
  std::size_t skipped = 0;
  std::size_t first_bad_line = 0;  // 1-based; 0 if none
};

// Parses a user id such as "u42" or "42".
std::optional<UserId> parse_user_id(std::string_view text);

// Parses one line into `log`. Returns false (and leaves `log` untouched) if the
// line is malformed. Blank lines are malformed only in the sense of being
// skipped silently: they return false with `blank` set.
bool parse_tsv_line(std::string_view line, TweetLog& log, bool* blank = nullptr);
bool parse_json_line(std::string_view line, TweetLog& log, bool* blank = nullptr);

void parse_stream(std::istream& in, LogSchema schema, const ParseOptions& opts, TweetLog& log,
                  ParseStats& stats);

// Throws DataError if the file cannot be read.
TweetLog parse_log(const std::string& path, const ParseOptions& opts, ParseStats* stats = nullptr);

// Serializes one record in the tab-separated schema (no trailing newline).
std::string format_tsv(const TweetLog& log, std::size_t i);

// ---------------------------------------------------------------------------
// Meme catalog

struct CatalogWindow {
  Timestamp emergence_start = 0;
  Timestamp emergence_end = 0;
  Timestamp analysis_end = 0;

  void validate() const;
  TimeRange emergence() const { return {emergence_start, emergence_end}; }
};

// Topic window = first third of the log span, analysis = the rest.
CatalogWindow default_window(const TweetLog& log);

struct CatalogOptions {
  CatalogWindow window;
  double english_threshold = 0.9;
  std::uint64_t min_adopters = 100;
  // English share over every tweet of the meme in the log; otherwise only over
  // tweets in [birth_time, analysis_end].
  bool english_share_full_log = true;
};

struct MemeInfo {
  MemeKind kind = MemeKind::kHashtag;
  bool seen = false;
  Timestamp birth_time = 0;
  std::size_t birth_record = 0;
  UserId first_poster = 0;
  double english_share = 0.0;
  std::uint64_t adopters = 0;
  bool accepted = false;
};

class MemeCatalog {
 public:
  MemeCatalog() = default;
  explicit MemeCatalog(std::vector<MemeInfo> memes) : memes_(std::move(memes)) {}

  std::size_t size() const { return memes_.size(); }
  const MemeInfo& operator[](MemeId m) const { return memes_.at(m); }
  bool accepted(MemeId m) const { return m < memes_.size() && memes_[m].accepted; }
  std::size_t accepted_count() const;
  std::vector<MemeId> accepted_memes() const;

  // CSV `meme_id,kind,birth_time,english_share,adopters,accepted`, meme_id
  // being the meme string.
  void write_csv(std::ostream& out, const Interner& memes) const;

 private:
  std::vector<MemeInfo> memes_;
};

MemeCatalog build_catalog(const TweetLog& log, const CatalogOptions& opts);

// ---------------------------------------------------------------------------
// Noun bags

struct NounBag {
  std::uint64_t owner = 0;        // UserId for users, MemeId for memes
  std::vector<TokenId> tokens;    // sorted, unique

  bool operator==(const NounBag&) const = default;
};

struct NounBags {
  std::vector<NounBag> users;  // sorted by owner
  std::vector<NounBag> memes;  // sorted by owner
};

// Only English tweets inside `prior_window` contribute. Owners with empty bags
// are omitted.
NounBags build_noun_bags(const TweetLog& log, TimeRange prior_window);

}  // namespace difflab
