#pragma once

// Little-endian scalar I/O for the binary caches and the event spool.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace difflab::binio {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; add byte swapping for this target");

template <typename T>
inline void write_raw(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
inline T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

inline void write_u64(std::ostream& out, std::uint64_t v) { write_raw(out, v); }
inline void write_u32(std::ostream& out, std::uint32_t v) { write_raw(out, v); }
inline void write_f64(std::ostream& out, double v) { write_raw(out, v); }
inline std::uint64_t read_u64(std::istream& in) { return read_raw<std::uint64_t>(in); }
inline std::uint32_t read_u32(std::istream& in) { return read_raw<std::uint32_t>(in); }
inline double read_f64(std::istream& in) { return read_raw<double>(in); }

}  // namespace difflab::binio
