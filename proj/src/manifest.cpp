#include "velgan/manifest.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "velgan/segy.hpp"

namespace velgan {

void KeyValueFile::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
  } else {
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
  }
}

void KeyValueFile::set_f64(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  set(key, buf);
}

void KeyValueFile::set_i64(const std::string& key, int64_t value) {
  set(key, std::to_string(value));
}

bool KeyValueFile::has(const std::string& key) const {
  return index_.count(key) != 0;
}

const std::string& KeyValueFile::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end())
    throw std::runtime_error("manifest: missing key '" + key + "'");
  return entries_[it->second].second;
}

std::string KeyValueFile::get_or(const std::string& key,
                                 const std::string& fallback) const {
  auto it = index_.find(key);
  return it == index_.end() ? fallback : entries_[it->second].second;
}

double KeyValueFile::get_f64(const std::string& key) const {
  return std::stod(get(key));
}

int64_t KeyValueFile::get_i64(const std::string& key) const {
  return std::stoll(get(key));
}

void KeyValueFile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("manifest: cannot write '" + path + "'");
  for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
  if (!out) throw std::runtime_error("manifest: write failed for '" + path + "'");
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open '" + path + "'");
  KeyValueFile kv;
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const char* ws = " \t\r";
      const size_t b = s.find_first_not_of(ws);
      if (b == std::string::npos) return std::string();
      const size_t e = s.find_last_not_of(ws);
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (!key.empty()) kv.set(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

uint32_t crc32_bytes(const void* data, size_t n) {
  return static_cast<uint32_t>(
      ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

uint32_t crc32_volume_samples(const Volume3D& v) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::vector<unsigned char> buf(static_cast<size_t>(v.n_samples) * 4);
  for (int il = 0; il < v.n_inlines; ++il) {
    for (int xl = 0; xl < v.n_crosslines; ++xl) {
      for (int k = 0; k < v.n_samples; ++k) {
        const uint32_t w = f64_to_ieee32_be(v.at(il, xl, k));
        buf[4 * k + 0] = static_cast<unsigned char>(w >> 24);
        buf[4 * k + 1] = static_cast<unsigned char>((w >> 16) & 0xff);
        buf[4 * k + 2] = static_cast<unsigned char>((w >> 8) & 0xff);
        buf[4 * k + 3] = static_cast<unsigned char>(w & 0xff);
      }
      crc = ::crc32(crc, buf.data(), static_cast<uInt>(buf.size()));
    }
  }
  return static_cast<uint32_t>(crc);
}

uint32_t crc32_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("crc32: cannot open '" + path + "'");
  uLong crc = ::crc32(0L, Z_NULL, 0);
  char buf[65536];
  while (in) {
    in.read(buf, sizeof buf);
    const std::streamsize got = in.gcount();
    if (got > 0)
      crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(got));
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace velgan
