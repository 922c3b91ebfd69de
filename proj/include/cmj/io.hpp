// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// CSV tables with shortest round-trip formatting of reals, and plain file output.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <system_error>
#include <vector>

#include "cmj/error.hpp"
#include "cmj/simulate.hpp"

namespace cmj {

/// Shortest decimal string that parses back to the same double.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Comma-separated table; fields are numbers or simple identifiers, so no quoting.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) { add_line(header); }

  class Row {
   public:
    explicit Row(CsvTable& t) : t_(t) {}
    Row& operator<<(double v) { return put(format_real(v)); }
    Row& operator<<(const std::string& s) { return put(s); }
    Row& operator<<(const char* s) { return put(s); }
    Row& operator<<(bool b) { return put(b ? "true" : "false"); }
    template <class I>
      requires std::is_integral_v<I>
    Row& operator<<(I v) {
      return put(std::to_string(v));
    }
    ~Row() noexcept(false) {
      if (fields_.size() != t_.columns_) throw Error("csv row has the wrong number of fields");
      t_.add_line(fields_);
    }

   private:
    Row& put(std::string s) {
      fields_.push_back(std::move(s));
      return *this;
    }
    CsvTable& t_;
    std::vector<std::string> fields_;
  };

  Row row() { return Row(*this); }
  [[nodiscard]] const std::string& str() const noexcept { return text_; }
  [[nodiscard]] std::size_t rows() const noexcept { return lines_ - 1; }

 private:
  void add_line(const std::vector<std::string>& f) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) text_ += ',';
      text_ += f[i];
    }
    text_ += '\n';
    ++lines_;
  }

  std::size_t columns_;
  std::size_t lines_ = 0;
  std::string text_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

/// Event list of one tree: time, delta (+L at a birth event, -1 at a death).
inline std::string events_csv(std::span<const Event> events) {
  CsvTable t({"time", "delta"});
  for (const auto& e : events) t.row() << e.time << static_cast<long long>(e.delta);
  return t.str();
}

}  // namespace cmj
