#pragma once

// On-disk event spool.
//
// Layout: magic "DLEVT1", u16 format version (1), u64 record count, then
// fixed-width 19-byte little-endian records
//
//   user:u64  meme:u32  kappa:u16  alignment:f32  flags:u8
//
// with alignment on the 1e-4 grid and flags as in exposure.hpp.

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "difflab/exposure.hpp"

namespace difflab {

inline constexpr std::size_t kSpoolRecordBytes = 19;

class SpoolWriter final : public EventSink {
 public:
  explicit SpoolWriter(const std::string& path);
  ~SpoolWriter() override;
  SpoolWriter(const SpoolWriter&) = delete;
  SpoolWriter& operator=(const SpoolWriter&) = delete;

  void consume(std::span<const Event> events) override;
  // Patches the record count into the header. Called by the destructor if
  // not called explicitly.
  void close();
  std::uint64_t count() const { return count_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::uint64_t count_ = 0;
  std::vector<char> buffer_;
  bool closed_ = false;
};

class SpoolReader {
 public:
  explicit SpoolReader(const std::string& path);

  std::uint64_t count() const { return count_; }
  // Fills `out` with up to `max` records; returns false at end of spool.
  bool next(std::vector<Event>& out, std::size_t max = 1 << 16);

 private:
  std::string path_;
  std::ifstream in_;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
  std::vector<char> buffer_;
};

std::vector<Event> read_spool(const std::string& path);
void write_spool(const std::string& path, std::span<const Event> events);

// CSV `user,meme,kappa,alignment,adopted,aggregate,user_class,meme_class,kind`
// where `user` is the multiplicity for aggregate rows.
void write_events_csv(std::ostream& out, std::span<const Event> events,
                      const std::vector<std::string>& meme_names);

}  // namespace difflab
