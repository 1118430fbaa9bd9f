#include "difflab/spool.hpp"

#include <cstdio>
#include <cstring>
#include <ostream>

#include "difflab/binary_io.hpp"

namespace difflab {

namespace {

constexpr char kSpoolMagic[6] = {'D', 'L', 'E', 'V', 'T', '1'};
constexpr std::uint16_t kSpoolVersion = 1;
constexpr std::streamoff kCountOffset = sizeof kSpoolMagic + sizeof kSpoolVersion;

void encode(const Event& e, char* p) {
  std::memcpy(p, &e.user, 8);
  std::memcpy(p + 8, &e.meme, 4);
  std::memcpy(p + 12, &e.kappa, 2);
  std::memcpy(p + 14, &e.alignment, 4);
  std::memcpy(p + 18, &e.flags, 1);
}

Event decode(const char* p) {
  Event e;
  std::memcpy(&e.user, p, 8);
  std::memcpy(&e.meme, p + 8, 4);
  std::memcpy(&e.kappa, p + 12, 2);
  std::memcpy(&e.alignment, p + 14, 4);
  std::memcpy(&e.flags, p + 18, 1);
  return e;
}

}  // namespace

SpoolWriter::SpoolWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw DataError("cannot write event spool: " + path);
  out_.write(kSpoolMagic, sizeof kSpoolMagic);
  binio::write_raw(out_, kSpoolVersion);
  binio::write_u64(out_, 0);
}

SpoolWriter::~SpoolWriter() {
  try {
    close();
  } catch (...) {
  }
}

void SpoolWriter::consume(std::span<const Event> events) {
  buffer_.resize(events.size() * kSpoolRecordBytes);
  for (std::size_t i = 0; i < events.size(); ++i) encode(events[i], buffer_.data() + i * kSpoolRecordBytes);
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  count_ += events.size();
}

void SpoolWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(kCountOffset);
  binio::write_u64(out_, count_);
  out_.close();
  if (!out_) throw DataError("failed writing event spool: " + path_);
}

SpoolReader::SpoolReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw DataError("cannot read event spool: " + path);
  char magic[6];
  in_.read(magic, sizeof magic);
  if (!in_ || std::memcmp(magic, kSpoolMagic, sizeof magic) != 0) throw DataError("bad event spool magic: " + path);
  const auto version = binio::read_raw<std::uint16_t>(in_);
  if (version != kSpoolVersion) throw DataError("unsupported event spool version");
  count_ = binio::read_u64(in_);
  if (!in_) throw DataError("truncated event spool header: " + path);
}

bool SpoolReader::next(std::vector<Event>& out, std::size_t max) {
  out.clear();
  if (read_ >= count_) return false;
  const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(max, count_ - read_));
  buffer_.resize(n * kSpoolRecordBytes);
  in_.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (!in_) throw DataError("truncated event spool: " + path_);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(decode(buffer_.data() + i * kSpoolRecordBytes));
  read_ += n;
  return true;
}

std::vector<Event> read_spool(const std::string& path) {
  SpoolReader reader(path);
  std::vector<Event> all, batch;
  all.reserve(reader.count());
  while (reader.next(batch)) all.insert(all.end(), batch.begin(), batch.end());
  return all;
}

void write_spool(const std::string& path, std::span<const Event> events) {
  SpoolWriter w(path);
  w.consume(events);
  w.close();
}

void write_events_csv(std::ostream& out, std::span<const Event> events,
                      const std::vector<std::string>& meme_names) {
  out << "user,meme,kappa,alignment,adopted,aggregate,user_class,meme_class,kind\n";
  char s[16];
  for (const Event& e : events) {
    std::snprintf(s, sizeof s, "%.4f", static_cast<double>(e.alignment_q()) / kAlignmentScale);
    if (!e.aggregate()) out << 'u';
    out << e.user << ',' << (e.meme < meme_names.size() ? meme_names[e.meme] : std::to_string(e.meme))
        << ',' << e.kappa << ',' << s << ',' << (e.adopted() ? 1 : 0) << ',' << (e.aggregate() ? 1 : 0)
        << ',' << to_string(e.user_class()) << ',' << to_string(e.meme_class()) << ','
        << to_string(e.meme_kind()) << '\n';
  }
}

}  // namespace difflab
