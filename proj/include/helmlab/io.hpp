#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Deterministic text formatting and file helpers: number formatting goes
// through std::to_chars (locale-free, shortest round-trip), checksums are
// FNV-1a 64.

namespace helmlab::io {

inline std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(size_t v) { return std::to_string(v); }

inline uint64_t fnv1a64(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_file: cannot open " + path);
  out << content;
}

inline std::string checksum_hex(const std::string& content) {
  const uint64_t h = fnv1a64(content.data(), content.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Simple CSV accumulator with a fixed header.
struct CsvTable {
  std::string header;
  std::vector<std::string> rows;

  explicit CsvTable(std::string hdr) : header(std::move(hdr)) {}
  void add(const std::vector<std::string>& fields) {
    std::string line;
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) line += ',';
      line += fields[i];
    }
    rows.push_back(std::move(line));
  }
  std::string str() const {
    std::string out = header;
    out += '\n';
    for (const auto& r : rows) {
      out += r;
      out += '\n';
    }
    return out;
  }
};

}  // namespace helmlab::io
