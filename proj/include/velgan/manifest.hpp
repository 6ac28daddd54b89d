#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "velgan/volume.hpp"

namespace velgan {

// Flat "key = value" text file with '#' comments. Dataset manifests,
// preprocessing statistics and run summaries all use this carrier. Entries
// keep insertion order so rewrites diff cleanly.
class KeyValueFile {
 public:
  void set(const std::string& key, const std::string& value);
  void set_f64(const std::string& key, double value);  // round-trip precision
  void set_i64(const std::string& key, int64_t value);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws if missing
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_f64(const std::string& key) const;
  int64_t get_i64(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  void save(const std::string& path) const;
  static KeyValueFile load(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, size_t> index_;
};

// CRC-32 (zlib polynomial) over a raw byte range.
uint32_t crc32_bytes(const void* data, size_t n);

// CRC-32 over the volume's sample bytes exactly as write_segy emits them
// (big-endian IEEE float32, inline-major trace order).
uint32_t crc32_volume_samples(const Volume3D& v);

// CRC-32 of a whole file; used to fingerprint checkpoints in reports.
uint32_t crc32_file(const std::string& path);

}  // namespace velgan
